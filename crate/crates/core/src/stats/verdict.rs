use serde::Serialize;

/// One named pass/fail outcome with its number, reference and tolerance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub value: f64,
    pub reference: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_score: Option<f64>,
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    /// Passes when `value < bound`.
    pub fn below(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            reference: 0.0,
            tolerance: bound,
            z_score: None,
            passed: value < bound,
            detail: format!("{value:.6e} < {bound:.6e}"),
        }
    }

    /// Passes when `value >= bound`.
    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            reference: bound,
            tolerance: 0.0,
            z_score: None,
            passed: value >= bound,
            detail: format!("{value:.6e} >= {bound:.6e}"),
        }
    }

    /// Passes when `|value - reference| <= rel * |reference|`.
    pub fn relative(name: impl Into<String>, value: f64, reference: f64, rel: f64) -> Self {
        let err = (value - reference).abs() / reference.abs().max(f64::MIN_POSITIVE);
        Self {
            name: name.into(),
            value,
            reference,
            tolerance: rel,
            z_score: None,
            passed: err <= rel,
            detail: format!("relative error {err:.3e} (tolerance {rel:.1e})"),
        }
    }

    /// Passes when `|z| < z_max`.
    pub fn z(name: impl Into<String>, value: f64, reference: f64, z: f64, z_max: f64) -> Self {
        Self {
            name: name.into(),
            value,
            reference,
            tolerance: z_max,
            z_score: Some(z),
            passed: z.abs() < z_max,
            detail: format!("|z| = {:.3} (limit {z_max})", z.abs()),
        }
    }

    /// Passes when `value <= bound`.
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            reference: bound,
            tolerance: 0.0,
            z_score: None,
            passed: value <= bound,
            detail: format!("{value:.6e} <= {bound:.6e}"),
        }
    }

    /// Passes when `|value - reference| <= tol`.
    pub fn within(name: impl Into<String>, value: f64, reference: f64, tol: f64) -> Self {
        let err = (value - reference).abs();
        Self {
            name: name.into(),
            value,
            reference,
            tolerance: tol,
            z_score: None,
            passed: err <= tol,
            detail: format!("|{value:.4} - {reference}| = {err:.3e} (tolerance {tol})"),
        }
    }

    pub fn flag(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value: passed as u8 as f64,
            reference: 1.0,
            tolerance: 0.0,
            z_score: None,
            passed,
            detail: detail.into(),
        }
    }

    pub fn with_z(mut self, z: f64) -> Self {
        self.z_score = Some(z);
        self
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_are_strict_or_inclusive_as_named() {
        assert!(!Verdict::below("a", 1.0, 1.0).passed);
        assert!(Verdict::at_most("a", 1.0, 1.0).passed);
        assert!(Verdict::at_least("a", 1.0, 1.0).passed);
        assert!(Verdict::within("a", 1.5, 1.0, 0.5).passed);
        assert!(!Verdict::below("a", f64::NAN, 1.0).passed);
    }

    #[test]
    fn relative_and_z() {
        assert!(Verdict::relative("r", 0.504, 0.5, 0.01).passed);
        assert!(!Verdict::relative("r", 0.51, 0.5, 0.01).passed);
        let v = Verdict::z("z", 1.0, 0.0, -2.9, 3.0);
        assert!(v.passed && v.z_score == Some(-2.9));
        assert!(!Verdict::z("z", 1.0, 0.0, 3.0, 3.0).passed);
    }

    #[test]
    fn serialized_form_omits_missing_z() {
        let s = serde_json::to_string(&Verdict::flag("f", true, "ok")).unwrap();
        assert!(!s.contains("z_score") && s.contains("\"passed\":true"));
    }
}
