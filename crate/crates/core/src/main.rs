fn main() {
    std::process::exit(carleson_lab::cli::run());
}
