//! Text formatting for floats in artifact files.

/// Shortest representation that parses back to the identical `f64`.
///
/// Plain decimal for moderate magnitudes, exponent form otherwise.
pub fn round_trip(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-5..1e16).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// C `printf("%.12e")` formatting, e.g. `5.900000000000e-01`.
pub fn c_exp12(x: f64) -> String {
    let s = format!("{x:.12e}");
    match s.split_once('e') {
        Some((mantissa, exp)) => {
            let (sign, digits) = match exp.strip_prefix('-') {
                Some(d) => ('-', d),
                None => ('+', exp),
            };
            format!("{mantissa}e{sign}{digits:0>2}")
        }
        None => s,
    }
}
