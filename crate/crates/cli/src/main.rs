fn main() {
    std::process::exit(nadegen::run(std::env::args_os()));
}
