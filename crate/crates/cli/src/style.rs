use std::io::IsTerminal;

/// ANSI styling is used only on a terminal and never when `NO_COLOR` is set.
pub fn color_enabled() -> bool {
    std::env::var_os("NO_COLOR").is_none() && std::io::stdout().is_terminal()
}

pub fn status(passed: bool, hard: bool, color: bool) -> String {
    let (label, code) = match (passed, hard) {
        (true, _) => ("PASS", "32"),
        (false, true) => ("FAIL", "31"),
        (false, false) => ("WARN", "33"),
    };
    if color {
        format!("\x1b[{code}m{label}\x1b[0m")
    } else {
        label.to_string()
    }
}
