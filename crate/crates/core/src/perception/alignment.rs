use serde::{Deserialize, Serialize};

use super::{dissimilarity, FeatureVector, LabeledTap, ReferenceTap, TapSource};
use crate::error::{Error, Result};

/// Result of aligning an arc of taps to the reference tap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    pub labeled: Vec<LabeledTap>,
    pub dissimilarities: Vec<f64>,
    pub min_index: usize,
    /// Parabolic sub-spacing offset of the minimum, in spacings.
    pub offset: f64,
    /// Hip angle where the arc best matches the reference, degrees.
    pub edge_angle: f64,
    /// The minimum sits at an arc end, so the true minimum may lie outside.
    pub boundary: bool,
}

impl Alignment {
    pub fn labels(&self) -> impl Iterator<Item = f64> + '_ {
        self.labeled.iter().map(|t| t.label)
    }
}

/// Label every tap of `arc` by its hip-angle offset from the tap that best
/// matches `reference`.
pub fn align_arc(arc: &[(f64, FeatureVector)], reference: &ReferenceTap) -> Result<Alignment> {
    if arc.len() < 3 {
        return Err(Error::DegenerateArc(arc.len()));
    }
    let d = arc
        .iter()
        .map(|(_, f)| dissimilarity(f, &reference.feature))
        .collect::<Result<Vec<_>>>()?;

    // argmin; ties prefer the smaller |hip angle|, then the smaller index
    let mut k = 0;
    for i in 1..d.len() {
        let better = d[i] < d[k] || (d[i] == d[k] && arc[i].0.abs() < arc[k].0.abs());
        if better {
            k = i;
        }
    }

    let last = arc.len() - 1;
    let boundary = k == 0 || k == last;
    let (offset, spacing) = if boundary {
        let spacing = if k == 0 {
            arc[1].0 - arc[0].0
        } else {
            arc[last].0 - arc[last - 1].0
        };
        (0.0, spacing)
    } else {
        let (dm, d0, dp) = (d[k - 1], d[k], d[k + 1]);
        let curvature = dm - 2.0 * d0 + dp;
        let offset = if curvature > 0.0 {
            (0.5 * (dm - dp) / curvature).clamp(-0.5, 0.5)
        } else {
            0.0
        };
        (offset, 0.5 * (arc[k + 1].0 - arc[k - 1].0))
    };
    let edge_angle = arc[k].0 + offset * spacing;

    let labeled = arc
        .iter()
        .map(|(angle, feature)| LabeledTap {
            feature: feature.clone(),
            label: angle - edge_angle,
        })
        .collect();

    Ok(Alignment {
        labeled,
        dissimilarities: d,
        min_index: k,
        offset,
        edge_angle,
        boundary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceOptions {
    /// Minimum spread of mean pin deflection (mm) for an arc to count as
    /// crossing the edge.
    pub transition_floor: f64,
    pub override_index: Option<usize>,
}

impl Default for ReferenceOptions {
    fn default() -> Self {
        Self {
            transition_floor: 0.1,
            override_index: None,
        }
    }
}

/// Pick the tap half-way through the contact transition: the one whose mean
/// pin deflection from `rest` is closest to the midpoint of the arc's range.
pub fn select_reference(
    arc: &[(f64, FeatureVector)],
    rest: &FeatureVector,
    arc_id: usize,
    options: &ReferenceOptions,
) -> Result<ReferenceTap> {
    if let Some(index) = options.override_index {
        let (_, feature) = arc.get(index).ok_or_else(|| Error::InvalidParameter {
            field: "override_index",
            reason: format!("index {index} outside arc of {} taps", arc.len()),
        })?;
        return Ok(ReferenceTap {
            feature: feature.clone(),
            source: TapSource {
                arc_id,
                tap_index: index,
            },
        });
    }
    if arc.is_empty() {
        return Err(Error::DegenerateArc(0));
    }

    let mean_deflection = arc
        .iter()
        .map(|(_, f)| mean_pin_deflection(f, rest))
        .collect::<Result<Vec<_>>>()?;
    let max = mean_deflection.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = mean_deflection.iter().copied().fold(f64::INFINITY, f64::min);
    if max - min < options.transition_floor {
        return Err(Error::NoTransition {
            range: max - min,
            floor: options.transition_floor,
        });
    }
    let mid = 0.5 * (max + min);
    let index = mean_deflection
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - mid).abs().total_cmp(&(b.1 - mid).abs()))
        .map(|(i, _)| i)
        .expect("non-empty arc");
    Ok(ReferenceTap {
        feature: arc[index].1.clone(),
        source: TapSource {
            arc_id,
            tap_index: index,
        },
    })
}

fn mean_pin_deflection(feature: &FeatureVector, rest: &FeatureVector) -> Result<f64> {
    if feature.len() != rest.len() {
        return Err(Error::LengthMismatch {
            left: feature.len(),
            right: rest.len(),
        });
    }
    let n = feature.pin_count().max(1) as f64;
    Ok(feature
        .0
        .chunks(2)
        .zip(rest.0.chunks(2))
        .map(|(p, r)| (p[0] - r[0]).hypot(p[1] - r[1]))
        .sum::<f64>()
        / n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic_arc(n: usize, spacing: f64) -> Vec<(f64, FeatureVector)> {
        let half = (n / 2) as f64;
        (0..n)
            .map(|k| {
                let a = (k as f64 - half) * spacing;
                (a, FeatureVector(vec![a, 0.5 * a, -a, 2.0]))
            })
            .collect()
    }

    fn reference_from(arc: &[(f64, FeatureVector)], index: usize) -> ReferenceTap {
        ReferenceTap {
            feature: arc[index].1.clone(),
            source: TapSource {
                arc_id: 0,
                tap_index: index,
            },
        }
    }

    #[test]
    fn exact_match_alignment() {
        let arc = synthetic_arc(31, 1.0);
        let al = align_arc(&arc, &reference_from(&arc, 7)).unwrap();
        assert_eq!(al.min_index, 7);
        assert_eq!(al.offset, 0.0);
        assert_eq!(al.labeled[7].label, 0.0);
        for (k, t) in al.labeled.iter().enumerate() {
            assert!((t.label - (arc[k].0 - arc[7].0)).abs() < 1e-12);
        }
        assert!(!al.boundary);
    }

    #[test]
    fn parabolic_refinement_recovers_offset() {
        // quadratic dissimilarity profile with minimum at 0.3 spacing past tap 5
        let ref_feature = FeatureVector(vec![0.0, 0.0]);
        let arc: Vec<_> = (0..11)
            .map(|k| {
                let a = k as f64 - 5.0;
                // single pin: d = |x|, quadratic in the hip angle
                let x = (a - 0.3).powi(2) + 1.0;
                (a, FeatureVector(vec![x, 0.0]))
            })
            .collect();
        let reference = ReferenceTap {
            feature: ref_feature,
            source: TapSource {
                arc_id: 0,
                tap_index: 0,
            },
        };
        let al = align_arc(&arc, &reference).unwrap();
        assert_eq!(al.min_index, 5);
        assert!((al.edge_angle - 0.3).abs() < 1e-12);
    }

    #[test]
    fn symmetric_profile_has_zero_offset() {
        let arc = synthetic_arc(9, 2.0);
        let al = align_arc(&arc, &reference_from(&arc, 4)).unwrap();
        assert_eq!(al.offset, 0.0);
        assert_eq!(al.edge_angle, 0.0);
    }

    #[test]
    fn ties_prefer_smaller_abs_angle() {
        let f = FeatureVector(vec![1.0, 1.0]);
        let arc = vec![
            (-2.0, f.clone()),
            (-1.0, FeatureVector(vec![0.0, 0.0])),
            (0.5, f.clone()),
            (1.0, FeatureVector(vec![0.0, 0.0])),
        ];
        let reference = ReferenceTap {
            feature: f,
            source: TapSource {
                arc_id: 0,
                tap_index: 0,
            },
        };
        let al = align_arc(&arc, &reference).unwrap();
        assert_eq!(al.min_index, 2);
    }

    #[test]
    fn boundary_flag_and_degenerate() {
        let arc = synthetic_arc(5, 1.0);
        let al = align_arc(&arc, &reference_from(&arc, 0)).unwrap();
        assert!(al.boundary);
        assert!(matches!(
            align_arc(&arc[..2], &reference_from(&arc, 0)),
            Err(Error::DegenerateArc(2))
        ));
    }

    #[test]
    fn labels_are_a_rigid_shift() {
        let arc = synthetic_arc(15, 0.5);
        let reference = ReferenceTap {
            feature: FeatureVector(vec![0.7, 0.2, -0.4, 2.1]),
            source: TapSource {
                arc_id: 0,
                tap_index: 0,
            },
        };
        let al = align_arc(&arc, &reference).unwrap();
        for i in 0..arc.len() {
            for j in 0..arc.len() {
                let dl = al.labeled[i].label - al.labeled[j].label;
                assert!((dl - (arc[i].0 - arc[j].0)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_arc_has_no_transition() {
        let f = FeatureVector(vec![1.0, 2.0, 3.0, 4.0]);
        let arc: Vec<_> = (0..5).map(|k| (k as f64, f.clone())).collect();
        let rest = FeatureVector(vec![0.0; 4]);
        let err = select_reference(&arc, &rest, 0, &ReferenceOptions::default());
        assert!(matches!(err, Err(Error::NoTransition { .. })));
    }

    #[test]
    fn override_index() {
        let arc = synthetic_arc(31, 1.0);
        let rest = FeatureVector(vec![0.0; 4]);
        let opts = ReferenceOptions {
            override_index: Some(12),
            ..ReferenceOptions::default()
        };
        let r = select_reference(&arc, &rest, 3, &opts).unwrap();
        assert_eq!(r.source, TapSource { arc_id: 3, tap_index: 12 });
        assert_eq!(r.feature, arc[12].1);
    }
}
