fn main() {
    std::process::exit(diegetic::cli::run(std::env::args_os()));
}
