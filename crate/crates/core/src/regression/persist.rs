//! Plain-text model files.
//!
//! ```text
//! version = 1
//! kernel = rbf
//! feature_dim = 2
//! gamma = 5.0000000000000000e-1
//! c = ...
//! epsilon = ...
//! bias = ...
//! scaler_min = v0 v1
//! scaler_max = v0 v1
//! n_sv = 3
//! sv = coef x0 x1
//! ...
//! end
//! ```
//!
//! Numbers carry 17 significant digits so `f64` values round-trip exactly.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::regression::{FeatureScaler, RegressionModel};
use crate::scalar::Real;

pub const MODEL_FORMAT_VERSION: u32 = 1;

fn num<T: Real>(v: T) -> String {
    format!("{:.16e}", v.as_f64())
}

fn row<T: Real>(vals: &[T]) -> String {
    vals.iter().map(|&v| num(v)).collect::<Vec<_>>().join(" ")
}

pub fn save_model<T: Real>(model: &RegressionModel<T>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "version = {MODEL_FORMAT_VERSION}");
    let _ = writeln!(out, "kernel = rbf");
    let _ = writeln!(out, "feature_dim = {}", model.feature_dim());
    let _ = writeln!(out, "gamma = {}", num(model.kernel_gamma));
    let _ = writeln!(out, "c = {}", num(model.cost_c));
    let _ = writeln!(out, "epsilon = {}", num(model.epsilon_tube));
    let _ = writeln!(out, "bias = {}", num(model.bias));
    let _ = writeln!(out, "scaler_min = {}", row(model.scaler.min()));
    let _ = writeln!(out, "scaler_max = {}", row(model.scaler.max()));
    let _ = writeln!(out, "n_sv = {}", model.support_vectors.len());
    for (sv, &coef) in model.support_vectors.iter().zip(&model.dual_coefficients) {
        let _ = writeln!(out, "sv = {} {}", num(coef), row(sv));
    }
    out.push_str("end\n");
    out
}

struct Lines<'a> {
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    /// Next non-blank line as `(key, value)`, requiring `key` to match.
    fn field(&mut self, key: &str) -> Result<&'a str> {
        loop {
            let Some((idx, line)) = self.iter.next() else {
                return Err(Error::parse(key, "unexpected end of file"));
            };
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::parse(key, format!("line {} is not `key = value`", idx + 1)));
            };
            if k.trim() != key {
                return Err(Error::parse(key, format!("line {} has `{}`", idx + 1, k.trim())));
            }
            return Ok(v.trim());
        }
    }

    fn end(&mut self) -> Result<()> {
        for (idx, line) in self.iter.by_ref() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line == "end" {
                return Ok(());
            }
            return Err(Error::parse("end", format!("line {}: expected `end`", idx + 1)));
        }
        Err(Error::parse("end", "missing `end` marker (file truncated?)"))
    }
}

fn parse_num<T: Real>(field: &str, s: &str) -> Result<T> {
    let v: f64 = s
        .parse()
        .map_err(|_| Error::parse(field, format!("`{s}` is not a number")))?;
    if !v.is_finite() {
        return Err(Error::parse(field, "value is not finite"));
    }
    T::from_f64(v).ok_or_else(|| Error::parse(field, "value out of range"))
}

fn parse_row<T: Real>(field: &str, s: &str) -> Result<Vec<T>> {
    s.split_whitespace()
        .enumerate()
        .map(|(i, tok)| parse_num(&format!("{field}[{i}]"), tok))
        .collect()
}

pub fn load_model<T: Real>(text: &str) -> Result<RegressionModel<T>> {
    let mut lines = Lines { iter: text.lines().enumerate() };
    let version = lines.field("version")?;
    if version != MODEL_FORMAT_VERSION.to_string() {
        return Err(Error::parse(
            "version",
            format!("unsupported version `{version}`, expected {MODEL_FORMAT_VERSION}"),
        ));
    }
    let kernel = lines.field("kernel")?;
    if kernel != "rbf" {
        return Err(Error::parse("kernel", format!("unsupported kernel `{kernel}`")));
    }
    let feature_dim: usize = lines
        .field("feature_dim")?
        .parse()
        .map_err(|_| Error::parse("feature_dim", "not a non-negative integer"))?;
    let kernel_gamma: T = parse_num("gamma", lines.field("gamma")?)?;
    let cost_c: T = parse_num("c", lines.field("c")?)?;
    let epsilon_tube: T = parse_num("epsilon", lines.field("epsilon")?)?;
    let bias: T = parse_num("bias", lines.field("bias")?)?;
    let smin: Vec<T> = parse_row("scaler_min", lines.field("scaler_min")?)?;
    let smax: Vec<T> = parse_row("scaler_max", lines.field("scaler_max")?)?;
    let n_sv: usize = lines
        .field("n_sv")?
        .parse()
        .map_err(|_| Error::parse("n_sv", "not a non-negative integer"))?;
    let mut support_vectors = Vec::with_capacity(n_sv);
    let mut dual_coefficients = Vec::with_capacity(n_sv);
    for i in 0..n_sv {
        let path = format!("sv[{i}]");
        let vals: Vec<T> = parse_row(&path, lines.field("sv").map_err(|e| match e {
            Error::Parse { message, .. } => Error::parse(path.clone(), message),
            other => other,
        })?)?;
        if vals.is_empty() {
            return Err(Error::parse(path, "empty support vector row"));
        }
        dual_coefficients.push(vals[0]);
        support_vectors.push(vals[1..].to_vec());
    }
    lines.end()?;

    if !(kernel_gamma > T::zero()) {
        return Err(Error::validation("model gamma must be positive"));
    }
    if !(cost_c > T::zero()) || epsilon_tube < T::zero() {
        return Err(Error::validation("model C must be positive and epsilon non-negative"));
    }
    if smin.len() != feature_dim || smax.len() != feature_dim {
        return Err(Error::validation(format!(
            "feature_dim {feature_dim} but scaler bounds have {} and {} entries",
            smin.len(),
            smax.len()
        )));
    }
    if let Some(i) = support_vectors.iter().position(|sv| sv.len() != feature_dim) {
        return Err(Error::validation(format!(
            "feature_dim {feature_dim} but support vector {i} has width {}",
            support_vectors[i].len()
        )));
    }
    let scaler = FeatureScaler::from_bounds(smin, smax)?;
    Ok(RegressionModel {
        support_vectors,
        dual_coefficients,
        bias,
        kernel_gamma,
        cost_c,
        epsilon_tube,
        scaler,
        training: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regression::{train, SvrParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn trained() -> RegressionModel<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..5).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let scores: Vec<f64> = rows.iter().map(|r| r[0].sin() * 10.0 + r[3]).collect();
        train(&rows, &scores, &SvrParams::default()).unwrap()
    }

    #[test]
    fn round_trip_predicts_identically() {
        let m = trained();
        let text = save_model(&m);
        let back: RegressionModel<f64> = load_model(&text).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let x: Vec<f64> = (0..5).map(|_| rng.random_range(-4.0..4.0)).collect();
            assert_eq!(m.predict(&x).unwrap().to_bits(), back.predict(&x).unwrap().to_bits());
        }
        assert_eq!(save_model(&back), text);
    }

    #[test]
    fn truncated_is_parse_error() {
        let text = save_model(&trained());
        let cut = &text[..text.len() / 2];
        assert!(matches!(load_model::<f64>(cut), Err(Error::Parse { .. })));
        let no_end = text.trim_end().trim_end_matches("end");
        assert!(matches!(load_model::<f64>(no_end), Err(Error::Parse { .. })));
    }

    #[test]
    fn corrupted_field_named() {
        let text = save_model(&trained()).replacen("bias = ", "bias = x", 1);
        match load_model::<f64>(&text) {
            Err(Error::Parse { field, .. }) => assert_eq!(field, "bias"),
            other => panic!("unexpected {other:?}"),
        }
        let text = save_model(&trained());
        let mut bad: Vec<String> = text.lines().map(str::to_string).collect();
        let idx = bad.iter().position(|l| l.starts_with("sv = ")).unwrap() + 1;
        bad[idx] = bad[idx].replacen("e", "q", 1);
        match load_model::<f64>(&bad.join("\n")) {
            Err(Error::Parse { field, .. }) => assert!(field.starts_with("sv[1]"), "{field}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn version_mismatch() {
        let text = save_model(&trained()).replacen("version = 1", "version = 2", 1);
        assert!(matches!(load_model::<f64>(&text), Err(Error::Parse { field, .. }) if field == "version"));
    }

    #[test]
    fn feature_dim_mismatch_is_validation() {
        let text = save_model(&trained()).replacen("feature_dim = 5", "feature_dim = 6", 1);
        assert!(matches!(load_model::<f64>(&text), Err(Error::Validation(_))));
    }

    #[test]
    fn f32_round_trip() {
        let rows: Vec<Vec<f32>> = (0..10).map(|i| vec![i as f32 * 0.3, (i * i) as f32]).collect();
        let scores: Vec<f32> = (0..10).map(|i| i as f32).collect();
        let m = train(&rows, &scores, &SvrParams::default()).unwrap();
        let back: RegressionModel<f32> = load_model(&save_model(&m)).unwrap();
        assert_eq!(m.predict(&[1.0, 2.0]).unwrap(), back.predict(&[1.0, 2.0]).unwrap());
    }
}
