fn main() {
    std::process::exit(periodbounds_cli::run());
}

mod periodbounds_cli {
    pub fn run() -> i32 {
        eprintln!("cli under construction");
        2
    }
}
