//! Deterministic plain-text rendering: every number printed by a
//! command goes through one 12-significant-digit formatter so that
//! identical invocations produce byte-identical output.

/// Render a float rounded to 12 significant digits, using the shortest
/// decimal form of the rounded value ("2", "0.02", "1.58496250072").
///
/// Rounding first and printing the shortest round-trip representation
/// second keeps integers free of trailing zeros and avoids exposing
/// sub-precision noise that could differ between code paths computing
/// the same quantity. The rounding goes through the scientific string
/// form rather than a power-of-ten multiply so that extreme magnitudes
/// pick up no division artifacts.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("scientific form round-trips");
    format!("{rounded}")
}

/// Render a check verdict as `pass` / `fail`.
pub fn pass_fail(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}
