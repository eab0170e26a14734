fn main() {
    std::process::exit(pomdp_cegar::cli::run(std::env::args_os()));
}
