//! Nodal P1 fields and transfers between nested levels.

use crate::error::{CoreError, Result};

/// A P1 finite element function given by its nodal coefficients at one level.
#[derive(Clone, Debug, PartialEq)]
pub struct FeField {
    pub level: usize,
    pub coeffs: Vec<f64>,
}

impl FeField {
    /// Zero field at `level` for a hierarchy with `n0` coarsest squares per side.
    pub fn zeros(level: usize, n0: usize) -> Self {
        let side = (n0 << level) + 1;
        FeField { level, coeffs: vec![0.0; side * side] }
    }

    /// Nodes per side of the underlying mesh.
    pub fn side(&self) -> usize {
        let side = (self.coeffs.len() as f64).sqrt().round() as usize;
        debug_assert_eq!(side * side, self.coeffs.len());
        side
    }

    /// `self += alpha * other`, requiring matching levels.
    pub fn axpy(&mut self, alpha: f64, other: &FeField) {
        assert_eq!(self.level, other.level, "axpy needs fields at one level");
        assert_eq!(self.coeffs.len(), other.coeffs.len());
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for a in &mut self.coeffs {
            *a *= s;
        }
    }
}

/// One-step midpoint prolongation from `nc` to `2 nc` squares per side:
/// coarse nodes copy over, edge midpoints average their edge endpoints, and
/// square centers average the endpoints of the bottom-left to top-right
/// diagonal. Exact on the nested P1 spaces of this triangulation.
fn prolong_once(vc: &[f64], nc: usize) -> Vec<f64> {
    let sc = nc + 1;
    let nf = 2 * nc;
    let sf = nf + 1;
    debug_assert_eq!(vc.len(), sc * sc);
    let mut vf = vec![0.0; sf * sf];
    for j in 0..sc {
        for i in 0..sc {
            vf[(2 * j) * sf + 2 * i] = vc[j * sc + i];
        }
    }
    for j in 0..sc {
        for i in 0..nc {
            vf[(2 * j) * sf + 2 * i + 1] = 0.5 * (vc[j * sc + i] + vc[j * sc + i + 1]);
        }
    }
    for j in 0..nc {
        for i in 0..sc {
            vf[(2 * j + 1) * sf + 2 * i] = 0.5 * (vc[j * sc + i] + vc[(j + 1) * sc + i]);
        }
    }
    for j in 0..nc {
        for i in 0..nc {
            vf[(2 * j + 1) * sf + 2 * i + 1] = 0.5 * (vc[j * sc + i] + vc[(j + 1) * sc + i + 1]);
        }
    }
    vf
}

/// Brings a field to a finer (or equal) level by repeated one-step
/// prolongation; errors if the target is coarser than the field.
pub fn prolong(field: &FeField, level: usize) -> Result<FeField> {
    if level < field.level {
        return Err(CoreError::LevelTransfer { from: field.level, to: level });
    }
    if level == field.level {
        return Ok(field.clone());
    }
    let mut v = field.coeffs.clone();
    let mut n = field.side() - 1;
    for _ in field.level..level {
        v = prolong_once(&v, n);
        n *= 2;
    }
    Ok(FeField { level, coeffs: v })
}

/// Evaluates a finer-level field at the nodes of a coarser nested mesh by
/// taking every `2^d`-th coefficient per direction; errors if the target is
/// finer than the field.
pub fn restrict_nodal(field: &FeField, level: usize) -> Result<FeField> {
    if level > field.level {
        return Err(CoreError::LevelTransfer { from: field.level, to: level });
    }
    if level == field.level {
        return Ok(field.clone());
    }
    let step = 1usize << (field.level - level);
    let sf = field.side();
    let sc = (sf - 1) / step + 1;
    let mut vc = Vec::with_capacity(sc * sc);
    for j in (0..sf).step_by(step) {
        for i in (0..sf).step_by(step) {
            vc.push(field.coeffs[j * sf + i]);
        }
    }
    Ok(FeField { level, coeffs: vc })
}

/// Prolongs or restricts as needed.
pub fn to_level(field: &FeField, level: usize) -> FeField {
    if level >= field.level {
        prolong(field, level).expect("prolongation to a finer level cannot fail")
    } else {
        restrict_nodal(field, level).expect("restriction to a coarser level cannot fail")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_field(level: usize, n0: usize) -> FeField {
        let n = n0 << level;
        let h = 1.0 / n as f64;
        let mut coeffs = Vec::new();
        for j in 0..=n {
            for i in 0..=n {
                coeffs.push(2.0 * (i as f64 * h) - 3.0 * (j as f64 * h) + 0.25);
            }
        }
        FeField { level, coeffs }
    }

    #[test]
    fn prolong_is_exact_on_linear_functions() {
        let coarse = linear_field(0, 4);
        let fine = prolong(&coarse, 2).unwrap();
        let direct = linear_field(2, 4);
        for (a, b) in fine.coeffs.iter().zip(&direct.coeffs) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn restrict_inverts_prolong() {
        let mut coarse = FeField::zeros(0, 4);
        for (k, c) in coarse.coeffs.iter_mut().enumerate() {
            *c = (k as f64 * 0.37).sin();
        }
        let fine = prolong(&coarse, 3).unwrap();
        let back = restrict_nodal(&fine, 0).unwrap();
        assert_eq!(back, coarse);
    }

    #[test]
    fn transfers_reject_wrong_direction() {
        let f = FeField::zeros(1, 4);
        assert!(prolong(&f, 0).is_err());
        assert!(restrict_nodal(&f, 2).is_err());
        assert_eq!(prolong(&f, 1).unwrap(), f);
    }

    #[test]
    fn diagonal_midpoint_uses_bottom_left_to_top_right() {
        // one coarse square (n0 = 2 smallest allowed): values chosen so the two
        // diagonals of square (0,0) average differently
        let coarse = FeField { level: 0, coeffs: vec![1.0, 0.0, 0.0, 0.0, 7.0, 0.0, 0.0, 0.0, 0.0] };
        let fine = prolong(&coarse, 1).unwrap();
        // center of square (0,0) at fine node (1,1), side 5
        assert_eq!(fine.coeffs[5 + 1], 0.5 * (1.0 + 7.0));
    }

    #[test]
    fn axpy_and_scale() {
        let mut a = FeField::zeros(0, 2);
        let mut b = FeField::zeros(0, 2);
        b.coeffs.iter_mut().for_each(|v| *v = 2.0);
        a.axpy(-0.5, &b);
        assert!(a.coeffs.iter().all(|&v| v == -1.0));
        a.scale(3.0);
        assert!(a.coeffs.iter().all(|&v| v == -3.0));
    }
}
