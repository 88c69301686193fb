fn main() {
    std::process::exit(heatlab::run(std::env::args_os()));
}
