use std::io;
use std::process;

fn main() {
    let code = multipoint_cli::run(
        std::env::args_os(),
        &mut io::stdout().lock(),
        &mut io::stderr(),
    );
    process::exit(code);
}
