//! Exhaustive reference evaluator for tiny trees (d <= 2, depth <= 2),
//! written directly from the definitions and sharing no code with the
//! library: matrices are flat row-major slices with closed-form 1x1 / 2x2
//! spectral arithmetic, averages are plain sums over leaf ranges, and every
//! sup enumerates its ancestor chain explicitly.

pub type Mat = Vec<f64>; // row-major d*d, symmetric
pub type Vc = Vec<f64>;

fn det(d: usize, m: &Mat) -> f64 {
    match d {
        1 => m[0],
        _ => m[0] * m[3] - m[1] * m[2],
    }
}

fn trace(d: usize, m: &Mat) -> f64 {
    match d {
        1 => m[0],
        _ => m[0] + m[3],
    }
}

pub fn mat_inv(d: usize, m: &Mat) -> Mat {
    match d {
        1 => vec![1.0 / m[0]],
        _ => {
            let dt = det(d, m);
            vec![m[3] / dt, -m[1] / dt, -m[2] / dt, m[0] / dt]
        }
    }
}

/// PSD square root: scalar sqrt for 1x1; for 2x2 the closed form
/// (M + sqrt(det) I) / sqrt(trace + 2 sqrt(det)).
pub fn mat_sqrt(d: usize, m: &Mat) -> Mat {
    match d {
        1 => vec![m[0].max(0.0).sqrt()],
        _ => {
            let s = det(d, m).max(0.0).sqrt();
            let t = (trace(d, m) + 2.0 * s).max(0.0).sqrt();
            if t == 0.0 {
                return vec![0.0; 4];
            }
            vec![(m[0] + s) / t, m[1] / t, m[2] / t, (m[3] + s) / t]
        }
    }
}

pub fn mat_vec(d: usize, m: &Mat, v: &Vc) -> Vc {
    match d {
        1 => vec![m[0] * v[0]],
        _ => vec![m[0] * v[0] + m[1] * v[1], m[2] * v[0] + m[3] * v[1]],
    }
}

pub fn lam_max(d: usize, m: &Mat) -> f64 {
    match d {
        1 => m[0],
        _ => {
            let mid = 0.5 * (m[0] + m[3]);
            let rad = (0.25 * (m[0] - m[3]).powi(2) + m[1] * m[2]).max(0.0).sqrt();
            mid + rad
        }
    }
}

pub fn dot(a: &Vc, b: &Vc) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(v: &Vc) -> f64 {
    dot(v, v).sqrt()
}

fn add_scaled(d: usize, acc: &mut Mat, m: &Mat, s: f64) {
    for i in 0..d * d {
        acc[i] += s * m[i];
    }
}

/// Average of a matrix-valued step function over the node (k, j): the plain
/// mean of its leaves in [j 2^(n-k), (j+1) 2^(n-k)).
fn avg_mat(d: usize, n: usize, leaves: &[Mat], k: usize, j: usize) -> Mat {
    let span = 1usize << (n - k);
    let mut acc = vec![0.0; d * d];
    for leaf in leaves.iter().skip(j * span).take(span) {
        add_scaled(d, &mut acc, leaf, 1.0);
    }
    acc.iter().map(|x| x / span as f64).collect()
}

fn avg_vec(d: usize, n: usize, leaves: &[Vc], k: usize, j: usize) -> Vc {
    let span = 1usize << (n - k);
    let mut acc = vec![0.0; d];
    for leaf in leaves.iter().skip(j * span).take(span) {
        for i in 0..d {
            acc[i] += leaf[i];
        }
    }
    acc.iter().map(|x| x / span as f64).collect()
}

/// The leaf field x -> W^(1/2)(x) f(x).
fn sqrt_w_f(d: usize, w_leaves: &[Mat], f_leaves: &[Vc]) -> Vec<Vc> {
    w_leaves
        .iter()
        .zip(f_leaves)
        .map(|(w, f)| mat_vec(d, &mat_sqrt(d, w), f))
        .collect()
}

/// sup over K of |K|^-1 sum_{Q subset K, Q in the tree} alpha_Q, by direct
/// double enumeration of node pairs.
pub fn carleson_constant(n: usize, alpha: &[Vec<f64>]) -> f64 {
    let mut best: f64 = 0.0;
    for kk in 0..=n {
        for jk in 0..(1usize << kk) {
            let mut sum = 0.0;
            for kq in kk..=n {
                for jq in 0..(1usize << kq) {
                    if (jq >> (kq - kk)) == jk {
                        sum += alpha[kq][jq];
                    }
                }
            }
            best = best.max(sum * (1usize << kk) as f64);
        }
    }
    best
}

/// M^W f per leaf: sup over the ancestor chain of
/// ||W^(1/2)(x) <W>_Q^-1 <W^(1/2) f>_Q||.
pub fn max_usual(d: usize, n: usize, w_leaves: &[Mat], f_leaves: &[Vc]) -> Vec<f64> {
    let tf = sqrt_w_f(d, w_leaves, f_leaves);
    let mut out = Vec::with_capacity(1 << n);
    for x in 0..(1usize << n) {
        let wx_sqrt = mat_sqrt(d, &w_leaves[x]);
        let mut best: f64 = 0.0;
        for k in 0..=n {
            let j = x >> (n - k);
            let h = mat_vec(
                d,
                &mat_inv(d, &avg_mat(d, n, w_leaves, k, j)),
                &avg_vec(d, n, &tf, k, j),
            );
            best = best.max(norm(&mat_vec(d, &wx_sqrt, &h)));
        }
        out.push(best);
    }
    out
}

/// The poor-memory process: per level the per-atom values, by running the
/// two-competitor induction verbatim.
pub fn max_poor_memory(
    d: usize,
    n: usize,
    w_leaves: &[Mat],
    f_leaves: &[Vc],
    k_max: usize,
) -> Vec<Vec<f64>> {
    let tf = sqrt_w_f(d, w_leaves, f_leaves);
    let value_at = |q: (usize, usize), k: (usize, usize)| -> f64 {
        let wq = avg_mat(d, n, w_leaves, q.0, q.1);
        let h = mat_vec(
            d,
            &mat_inv(d, &avg_mat(d, n, w_leaves, k.0, k.1)),
            &avg_vec(d, n, &tf, k.0, k.1),
        );
        norm(&mat_vec(d, &mat_sqrt(d, &wq), &h))
    };
    let mut memory = vec![vec![(0usize, 0usize)]];
    let mut values = vec![vec![value_at((0, 0), (0, 0))]];
    for k in 1..=k_max {
        let mut row = Vec::new();
        let mut vals = Vec::new();
        for j in 0..(1usize << k) {
            let inherited_interval = memory[k - 1][j / 2];
            let local = value_at((k, j), (k, j));
            let inherited = value_at((k, j), inherited_interval);
            if local > inherited {
                row.push((k, j));
            } else {
                row.push(inherited_interval);
            }
            vals.push(local.max(inherited));
        }
        memory.push(row);
        values.push(vals);
    }
    values
}

/// sum_Q alpha_Q |< <W>_Q^-1 <W^(1/2)f>_Q , <W^-1>_Q^-1 <W^(-1/2)g>_Q >|.
pub fn bet_sum(
    d: usize,
    n: usize,
    w_leaves: &[Mat],
    f_leaves: &[Vc],
    g_leaves: &[Vc],
    alpha: &[Vec<f64>],
) -> f64 {
    let w_inv_leaves: Vec<Mat> = w_leaves.iter().map(|w| mat_inv(d, w)).collect();
    let tf = sqrt_w_f(d, w_leaves, f_leaves);
    let tg: Vec<Vc> = w_inv_leaves
        .iter()
        .zip(g_leaves)
        .map(|(wi, g)| mat_vec(d, &mat_sqrt(d, wi), g))
        .collect();
    let mut total = 0.0;
    for k in 0..=n {
        for j in 0..(1usize << k) {
            let left = mat_vec(
                d,
                &mat_inv(d, &avg_mat(d, n, w_leaves, k, j)),
                &avg_vec(d, n, &tf, k, j),
            );
            let right = mat_vec(
                d,
                &mat_inv(d, &avg_mat(d, n, &w_inv_leaves, k, j)),
                &avg_vec(d, n, &tg, k, j),
            );
            total += alpha[k][j] * dot(&left, &right).abs();
        }
    }
    total
}

/// F(Q) at a single node (for the hand-checked reference instance).
pub fn bet_f_at(
    d: usize,
    n: usize,
    w_leaves: &[Mat],
    f_leaves: &[Vc],
    g_leaves: &[Vc],
    k: usize,
    j: usize,
) -> f64 {
    let mut alpha = vec![vec![0.0; 1]; n + 1];
    for (lvl, row) in alpha.iter_mut().enumerate() {
        row.resize(1 << lvl, 0.0);
    }
    alpha[k][j] = 1.0;
    bet_sum(d, n, w_leaves, f_leaves, g_leaves, &alpha)
}

/// sum_Q ||A_Q^(1/2) <W^(1/2) f>_Q||^2, through the explicit square root.
pub fn cet_sum(
    d: usize,
    n: usize,
    w_leaves: &[Mat],
    f_leaves: &[Vc],
    amat: &[Vec<Mat>],
) -> f64 {
    let tf = sqrt_w_f(d, w_leaves, f_leaves);
    let mut total = 0.0;
    for k in 0..=n {
        for j in 0..(1usize << k) {
            let root = mat_sqrt(d, &amat[k][j]);
            let fq = avg_vec(d, n, &tf, k, j);
            total += dot(
                &mat_vec(d, &root, &fq),
                &mat_vec(d, &root, &fq),
            );
        }
    }
    total
}

/// sup over nodes of lambda_max(<W^-1>^(1/2) <W> <W^-1>^(1/2)), which equals
/// ||<W>^(1/2) <W^-1>^(1/2)||^2.
pub fn a2_characteristic(d: usize, n: usize, w_leaves: &[Mat]) -> f64 {
    let w_inv_leaves: Vec<Mat> = w_leaves.iter().map(|w| mat_inv(d, w)).collect();
    let mut best: f64 = 0.0;
    for k in 0..=n {
        for j in 0..(1usize << k) {
            let wq = avg_mat(d, n, w_leaves, k, j);
            let vq_sqrt = mat_sqrt(d, &avg_mat(d, n, &w_inv_leaves, k, j));
            // B W B with B = V^(1/2)
            let bw: Mat = match d {
                1 => vec![vq_sqrt[0] * wq[0] * vq_sqrt[0]],
                _ => {
                    let mut tmp = vec![0.0; 4];
                    for r in 0..2 {
                        for c in 0..2 {
                            tmp[r * 2 + c] =
                                vq_sqrt[r * 2] * wq[c] + vq_sqrt[r * 2 + 1] * wq[2 + c];
                        }
                    }
                    let mut out = vec![0.0; 4];
                    for r in 0..2 {
                        for c in 0..2 {
                            out[r * 2 + c] =
                                tmp[r * 2] * vq_sqrt[c] + tmp[r * 2 + 1] * vq_sqrt[2 + c];
                        }
                    }
                    out
                }
            };
            best = best.max(lam_max(d, &bw));
        }
    }
    best
}

/// max over K of lambda_max(<W>_K^(-1/2) [|K|^-1 sum_{Q in D(K)} alpha_Q
/// <W^-1>_Q^-1] <W>_K^(-1/2)).
pub fn redundant_constant(d: usize, n: usize, w_leaves: &[Mat], alpha: &[Vec<f64>]) -> f64 {
    let w_inv_leaves: Vec<Mat> = w_leaves.iter().map(|w| mat_inv(d, w)).collect();
    let mut best: f64 = 0.0;
    for kk in 0..=n {
        for jk in 0..(1usize << kk) {
            let mut sum = vec![0.0; d * d];
            for kq in kk..=n {
                for jq in 0..(1usize << kq) {
                    if (jq >> (kq - kk)) == jk {
                        let term = mat_inv(d, &avg_mat(d, n, &w_inv_leaves, kq, jq));
                        add_scaled(d, &mut sum, &term, alpha[kq][jq]);
                    }
                }
            }
            let scale = (1usize << kk) as f64;
            let pinch = mat_inv(d, &mat_sqrt(d, &avg_mat(d, n, w_leaves, kk, jk)));
            let inner = match d {
                1 => vec![pinch[0] * sum[0] * scale * pinch[0]],
                _ => {
                    let mut tmp = vec![0.0; 4];
                    for r in 0..2 {
                        for c in 0..2 {
                            tmp[r * 2 + c] = pinch[r * 2] * sum[c] * scale
                                + pinch[r * 2 + 1] * sum[2 + c] * scale;
                        }
                    }
                    let mut out = vec![0.0; 4];
                    for r in 0..2 {
                        for c in 0..2 {
                            out[r * 2 + c] = tmp[r * 2] * pinch[c] + tmp[r * 2 + 1] * pinch[2 + c];
                        }
                    }
                    out
                }
            };
            best = best.max(lam_max(d, &inner));
        }
    }
    best
}
