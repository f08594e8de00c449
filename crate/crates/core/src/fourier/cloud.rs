use crate::error::{Error, Result};
use crate::so3::Rotation;
use crate::Real;

/// One point in spherical coordinates with its channel label index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CloudPoint<T> {
    pub r: T,
    pub theta: T,
    pub phi: T,
    pub channel: usize,
    pub weight: T,
}

/// Weighted, labelled points. `labels` fixes the channel order of the transform.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud<T> {
    pub labels: Vec<String>,
    pub points: Vec<CloudPoint<T>>,
}

/// `(r, theta, phi)` with `theta = acos(z/r)`; the origin maps to `(0, 0, 0)`.
pub fn cartesian_to_spherical<T: Real>(v: [T; 3]) -> (T, T, T) {
    let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if r == T::zero() {
        return (r, T::zero(), T::zero());
    }
    let c = (v[2] / r).max(-T::one()).min(T::one());
    (r, c.acos(), v[1].atan2(v[0]))
}

pub fn spherical_to_cartesian<T: Real>(r: T, theta: T, phi: T) -> [T; 3] {
    let s = theta.sin();
    [r * s * phi.cos(), r * s * phi.sin(), r * theta.cos()]
}

impl<T: Real> PointCloud<T> {
    pub fn new(labels: Vec<String>) -> Self {
        Self { labels, points: Vec::new() }
    }

    pub fn push_cartesian(&mut self, v: [T; 3], channel: usize, weight: T) -> Result<()> {
        if channel >= self.labels.len() {
            return Err(Error::InvalidArgument(format!("channel {channel} not among {} labels", self.labels.len())));
        }
        let (r, theta, phi) = cartesian_to_spherical(v);
        self.points.push(CloudPoint { r, theta, phi, channel, weight });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn cartesian(&self) -> Vec<[T; 3]> {
        self.points.iter().map(|p| spherical_to_cartesian(p.r, p.theta, p.phi)).collect()
    }

    /// Rotates every point about the origin.
    pub fn rotate(&self, rot: &Rotation<T>) -> Self {
        let points = self
            .points
            .iter()
            .map(|p| {
                let (r, theta, phi) = cartesian_to_spherical(rot.apply(spherical_to_cartesian(p.r, p.theta, p.phi)));
                CloudPoint { r, theta, phi, ..*p }
            })
            .collect();
        Self { labels: self.labels.clone(), points }
    }
}

/// Parses whitespace-separated `x y z label [weight]` records.
///
/// Blank lines and `#` comments are ignored; a line `> id` starts a new cloud
/// (a file without any `>` line holds a single cloud with id `"0"`). When
/// `labels` is given, unknown labels are errors and channel order follows
/// it; otherwise labels are collected in order of first appearance.
pub fn parse_point_clouds(text: &str, labels: Option<&[String]>) -> Result<Vec<(String, PointCloud<f64>)>> {
    let mut label_set: Vec<String> = labels.map(|l| l.to_vec()).unwrap_or_default();
    let fixed = labels.is_some();
    let mut raw: Vec<(String, Vec<([f64; 3], usize, f64)>)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(id) = line.strip_prefix('>') {
            let id = id.trim();
            if id.is_empty() {
                return Err(Error::Parse { line: line_no, message: "empty cloud id".into() });
            }
            raw.push((id.to_string(), Vec::new()));
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 4 && f.len() != 5 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected `x y z label [weight]`, got {} fields", f.len()),
            });
        }
        let num = |s: &str, what: &str| -> Result<f64> {
            let v: f64 = s.parse().map_err(|_| Error::Parse { line: line_no, message: format!("bad {what} {s:?}") })?;
            if !v.is_finite() {
                return Err(Error::Parse { line: line_no, message: format!("non-finite {what}") });
            }
            Ok(v)
        };
        let xyz = [num(f[0], "x")?, num(f[1], "y")?, num(f[2], "z")?];
        let weight = if f.len() == 5 { num(f[4], "weight")? } else { 1.0 };
        let ch = match label_set.iter().position(|l| l == f[3]) {
            Some(c) => c,
            None if fixed => {
                return Err(Error::Parse { line: line_no, message: format!("unknown label {:?}", f[3]) });
            }
            None => {
                label_set.push(f[3].to_string());
                label_set.len() - 1
            }
        };
        if raw.is_empty() {
            raw.push(("0".to_string(), Vec::new()));
        }
        raw.last_mut().expect("nonempty").1.push((xyz, ch, weight));
    }
    let mut out = Vec::with_capacity(raw.len());
    for (id, pts) in raw {
        let mut c = PointCloud::new(label_set.clone());
        for (v, ch, w) in pts {
            c.push_cartesian(v, ch, w)?;
        }
        out.push((id, c));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions() {
        let (r, t, p) = cartesian_to_spherical([0.0, 0.0, 2.0]);
        assert_eq!((r, t, p), (2.0, 0.0, 0.0));
        let (r, t, p) = cartesian_to_spherical([0.0f64, 1.0, 0.0]);
        assert!((r - 1.0).abs() < 1e-15 && (t - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!((p - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        let v = spherical_to_cartesian(1.5f64, 0.7, -2.0);
        let (r, t, p) = cartesian_to_spherical(v);
        assert!((r - 1.5).abs() < 1e-14 && (t - 0.7).abs() < 1e-14 && (p + 2.0).abs() < 1e-14);
        assert_eq!(cartesian_to_spherical([0.0, 0.0, 0.0]), (0.0, 0.0, 0.0));
    }

    #[test]
    fn parse_multiple_clouds() {
        let text = "# header\n> a\n0 0 1 C\n1 0 0 N 0.5\n\n> b\n0 1 0 C # trailing\n";
        let clouds = parse_point_clouds(text, None).unwrap();
        assert_eq!(clouds.len(), 2);
        assert_eq!(clouds[0].0, "a");
        assert_eq!(clouds[0].1.labels, vec!["C", "N"]);
        assert_eq!(clouds[0].1.points[1].weight, 0.5);
        assert_eq!(clouds[1].1.labels, vec!["C", "N"]);
        assert_eq!(clouds[1].1.len(), 1);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let e = parse_point_clouds("0 0 1 C\n0 0 x C\n", None).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        let labels = vec!["C".to_string()];
        let e = parse_point_clouds("0 0 1 C\n\n1 1 1 S\n", Some(&labels)).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }));
        let e = parse_point_clouds("1 2 3\n", None).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn single_anonymous_cloud() {
        let c = parse_point_clouds("0 0 1 C\n", None).unwrap();
        assert_eq!(c[0].0, "0");
        assert!(parse_point_clouds("", None).unwrap().is_empty());
    }
}
