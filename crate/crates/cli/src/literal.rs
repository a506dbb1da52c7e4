//! State literals: `mode:re,im` terms joined by `;`.

use num_complex::Complex64;
use timesym::hilbert::DEFAULT_TOL;
use timesym::BasisLabel;

use crate::CliError;

/// Literals whose norm is this close to 1 are renormalized; others are rejected.
pub const LITERAL_NORM_TOL: f64 = 1e-9;

/// Parses `a:1,0;b:0,-0.5` into ordered (mode, amplitude) terms.
pub fn parse_terms(text: &str) -> Result<Vec<(BasisLabel, Complex64)>, CliError> {
    let bad = |why: &str| CliError::Literal(format!("{why} in state literal '{text}'"));
    let mut terms: Vec<(BasisLabel, Complex64)> = Vec::new();
    for term in text.split(';').map(str::trim).filter(|t| !t.is_empty()) {
        let (mode, value) = term.split_once(':').ok_or_else(|| bad("missing ':'"))?;
        let mode = mode.trim();
        if mode.is_empty() {
            return Err(bad("empty mode name"));
        }
        let (re, im) = value.split_once(',').ok_or_else(|| bad("amplitude must be 're,im'"))?;
        let parse = |s: &str| -> Result<f64, CliError> {
            let x: f64 = s.trim().parse().map_err(|_| bad(&format!("bad number '{}'", s.trim())))?;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(bad("non-finite number"))
            }
        };
        let amp = Complex64::new(parse(re)?, parse(im)?);
        if terms.iter().any(|(m, _)| m.as_str() == mode) {
            return Err(bad(&format!("mode '{mode}' repeated")));
        }
        terms.push((BasisLabel::from(mode), amp));
    }
    if terms.is_empty() {
        return Err(bad("no terms"));
    }
    Ok(terms)
}

/// Parses and normalizes a literal; the norm must already be 1 within [`LITERAL_NORM_TOL`].
pub fn parse_normalized(text: &str) -> Result<Vec<(BasisLabel, Complex64)>, CliError> {
    let terms = parse_terms(text)?;
    let norm = terms.iter().map(|(_, a)| a.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > LITERAL_NORM_TOL.max(DEFAULT_TOL) {
        return Err(CliError::Literal(format!("state literal '{text}' has norm {norm}, expected 1")));
    }
    Ok(terms.into_iter().map(|(m, a)| (m, a / norm)).collect())
}

/// Parses `label:value;label:value` eigenvalue lists.
pub fn parse_eigen(text: &str) -> Result<Vec<(BasisLabel, f64)>, CliError> {
    let bad = |why: &str| CliError::Literal(format!("{why} in eigenvalue list '{text}'"));
    let mut out = Vec::new();
    for term in text.split(';').map(str::trim).filter(|t| !t.is_empty()) {
        let (label, value) = term.split_once(':').ok_or_else(|| bad("missing ':'"))?;
        let v: f64 = value.trim().parse().map_err(|_| bad(&format!("bad number '{}'", value.trim())))?;
        if !v.is_finite() {
            return Err(bad("non-finite number"));
        }
        out.push((BasisLabel::from(label.trim()), v));
    }
    if out.is_empty() {
        return Err(bad("no terms"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_terms_in_order() {
        let t = parse_terms("g:0.7071067811865476,0; h:0,-0.7071067811865476").unwrap();
        assert_eq!(t[0].0.as_str(), "g");
        assert_eq!(t[1].1, Complex64::new(0.0, -std::f64::consts::FRAC_1_SQRT_2));
    }

    #[test]
    fn rejects_malformed() {
        for bad in ["", "a", "a:1", "a:x,0", ":1,0", "a:1,0;a:0,1", "a:inf,0"] {
            assert!(matches!(parse_terms(bad), Err(CliError::Literal(_))), "{bad}");
        }
    }

    #[test]
    fn normalization_is_checked() {
        assert!(parse_normalized("a:1,0").is_ok());
        assert!(matches!(parse_normalized("a:1,1"), Err(CliError::Literal(_))));
    }

    #[test]
    fn eigen_lists() {
        let e = parse_eigen("up:0.5;down:-0.5").unwrap();
        assert_eq!(e[1], (BasisLabel::from("down"), -0.5));
        assert!(parse_eigen("up").is_err());
    }
}
