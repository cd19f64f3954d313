fn main() {
    std::process::exit(event_tsr::experiment::main_with(std::env::args_os()));
}
