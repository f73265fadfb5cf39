fn main() {
    std::process::exit(crss_lab::run(std::env::args_os()));
}
