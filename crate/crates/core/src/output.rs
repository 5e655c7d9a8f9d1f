//! Plain-text output helpers shared by the engines and the CLI.

use std::io::{self, Write};

use crate::network::ReactionNetwork;
use crate::trajectory::Trajectory;

/// Formats like C's `printf("%.*g", precision, x)`.
pub fn format_g(x: f64, precision: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.into();
    }
    let p = precision.max(1);
    let sci = format!("{:.*e}", p - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if exp < -4 || exp >= p as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_owned()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Writes `t,<species...>` rows, one per sample, with `%.10g` numbers.
pub fn write_trajectory_csv<W: Write>(
    net: &ReactionNetwork,
    traj: &Trajectory,
    mut out: W,
) -> io::Result<()> {
    write!(out, "t")?;
    for sp in net.species() {
        write!(out, ",{}", sp.name)?;
    }
    writeln!(out)?;
    for s in &traj.samples {
        write!(out, "{}", format_g(s.t, 10))?;
        for v in net.values(s) {
            write!(out, ",{}", format_g(v, 10))?;
        }
        writeln!(out)?;
    }
    Ok(())
}
