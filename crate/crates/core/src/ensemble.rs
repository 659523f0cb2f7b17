//! Quenched and annealed averaging of partition functions across members.
//!
//! Quenched: average ln χ over members, then fit; this tracks the typical
//! member. Annealed: ln of the member-average of χ, reduced in log space;
//! rare members with extreme moments dominate, widening the spectrum.
//! Jensen's inequality puts the annealed cell above the quenched cell
//! everywhere.

use serde::{Deserialize, Serialize};

use crate::error::{MfError, Result};
use crate::mfcore::{
    scaling_from_rows, AnalysisGrid, AnalyzeParams, PartitionTable, ScaleRange, ScalingResult,
};
use crate::numerics::{logsumexp, KahanSum};

pub const DEFAULT_QUORUM: f64 = 0.8;

/// One member's moment grid, detached from the series it came from.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MemberAnalysis {
    pub id: String,
    pub q_values: Vec<f64>,
    pub box_sizes: Vec<usize>,
    pub analyzed_length: usize,
    pub ln_chi: Vec<Vec<Option<f64>>>,
}

impl MemberAnalysis {
    pub fn from_table(id: impl Into<String>, table: &PartitionTable) -> Self {
        Self {
            id: id.into(),
            q_values: table.grid.q_values.clone(),
            box_sizes: table.grid.box_sizes.clone(),
            analyzed_length: table.grid.analyzed_length,
            ln_chi: table.ln_chi.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnsembleTable {
    /// Sorted; averaging folds run in this order for bitwise determinism.
    pub member_ids: Vec<String>,
    pub member_lengths: Vec<usize>,
    pub q_values: Vec<f64>,
    pub box_sizes: Vec<usize>,
    /// Indexed [member][q][s] on the common grid.
    pub ln_chi_per_member: Vec<Vec<Vec<Option<f64>>>>,
    pub quenched_ln_chi: Vec<Vec<Option<f64>>>,
    pub annealed_ln_chi: Vec<Vec<Option<f64>>>,
    pub member_count_per_cell: Vec<Vec<usize>>,
    pub quorum: f64,
    /// Cells need at least this many contributors to stay defined.
    pub quorum_count: usize,
}

/// Intersect member grids, restack every member onto the common (q, s)
/// cells, and reduce the quenched and annealed averages.
pub fn align_members(members: Vec<MemberAnalysis>, quorum: f64) -> Result<EnsembleTable> {
    if members.is_empty() {
        return Err(MfError::IncompatibleMembers("no members supplied".into()));
    }
    if !(0.0..=1.0).contains(&quorum) {
        return Err(MfError::InvalidParameter {
            name: "quorum",
            reason: format!("must lie in [0, 1], got {quorum}"),
        });
    }
    let mut members = members;
    members.sort_by(|a, b| a.id.cmp(&b.id));
    if members.windows(2).any(|w| w[0].id == w[1].id) {
        return Err(MfError::IncompatibleMembers("duplicate member ids".into()));
    }

    // intersection of q grids, keyed exactly: grids built by this crate
    // produce bit-identical q values
    let mut q_values: Vec<f64> = members[0].q_values.clone();
    for m in &members[1..] {
        q_values.retain(|q| m.q_values.iter().any(|x| x == q));
    }
    let mut box_sizes: Vec<usize> = members[0].box_sizes.clone();
    for m in &members[1..] {
        box_sizes.retain(|s| m.box_sizes.contains(s));
    }
    if q_values.is_empty() || box_sizes.is_empty() {
        return Err(MfError::IncompatibleMembers(
            "member grids share no common (q, s) cells".into(),
        ));
    }

    let nq = q_values.len();
    let ns = box_sizes.len();
    let n_members = members.len();
    let quorum_count = ((quorum * n_members as f64).ceil() as usize).max(1);

    let mut stacked = Vec::with_capacity(n_members);
    for m in &members {
        let qi_map: Vec<usize> = q_values
            .iter()
            .map(|q| m.q_values.iter().position(|x| x == q).unwrap())
            .collect();
        let si_map: Vec<usize> = box_sizes
            .iter()
            .map(|s| m.box_sizes.iter().position(|x| x == s).unwrap())
            .collect();
        let grid: Vec<Vec<Option<f64>>> = (0..nq)
            .map(|qi| (0..ns).map(|si| m.ln_chi[qi_map[qi]][si_map[si]]).collect())
            .collect();
        stacked.push(grid);
    }

    let mut quenched = vec![vec![None; ns]; nq];
    let mut annealed = vec![vec![None; ns]; nq];
    let mut counts = vec![vec![0usize; ns]; nq];
    let mut cell_values = Vec::with_capacity(n_members);
    for qi in 0..nq {
        for si in 0..ns {
            cell_values.clear();
            for member in &stacked {
                if let Some(v) = member[qi][si] {
                    cell_values.push(v);
                }
            }
            counts[qi][si] = cell_values.len();
            if cell_values.len() < quorum_count {
                continue;
            }
            let mut acc = KahanSum::new();
            for &v in &cell_values {
                acc.add(v);
            }
            quenched[qi][si] = Some(acc.value() / cell_values.len() as f64);
            annealed[qi][si] = Some(logsumexp(&cell_values) - (cell_values.len() as f64).ln());
        }
    }

    Ok(EnsembleTable {
        member_ids: members.iter().map(|m| m.id.clone()).collect(),
        member_lengths: members.iter().map(|m| m.analyzed_length).collect(),
        q_values,
        box_sizes,
        ln_chi_per_member: stacked,
        quenched_ln_chi: quenched,
        annealed_ln_chi: annealed,
        member_count_per_cell: counts,
        quorum,
        quorum_count,
    })
}

/// Scaling fit of one averaged side (shared by quenched and annealed).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnsembleSide {
    pub scaling_ranges: Vec<Option<ScaleRange>>,
    #[serde(flatten)]
    pub scaling: ScalingResult,
}

pub fn quenched_tau(table: &EnsembleTable, params: &AnalyzeParams) -> Result<EnsembleSide> {
    side(table, &table.quenched_ln_chi, params)
}

pub fn annealed_tau(table: &EnsembleTable, params: &AnalyzeParams) -> Result<EnsembleSide> {
    side(table, &table.annealed_ln_chi, params)
}

fn side(
    table: &EnsembleTable,
    rows: &[Vec<Option<f64>>],
    params: &AnalyzeParams,
) -> Result<EnsembleSide> {
    let (scaling_ranges, scaling) =
        scaling_from_rows(&table.q_values, &table.box_sizes, rows, params)?;
    Ok(EnsembleSide { scaling_ranges, scaling })
}

/// Analyze raw member series on one shared grid (all truncated to the
/// shortest member's analyzed length) and reduce the ensemble.
pub fn ensemble_from_series(
    members: &[(String, Vec<f64>)],
    params: &AnalyzeParams,
    quorum: f64,
) -> Result<EnsembleTable> {
    if members.is_empty() {
        return Err(MfError::IncompatibleMembers("no members supplied".into()));
    }
    let min_len = members.iter().map(|(_, v)| v.len()).min().unwrap();
    let grid = AnalysisGrid::from_length(min_len, params)?;
    let analyses = members
        .iter()
        .map(|(id, v)| {
            let table = PartitionTable::compute(v, grid.clone())?;
            Ok(MemberAnalysis::from_table(id.clone(), &table))
        })
        .collect::<Result<Vec<_>>>()?;
    align_members(analyses, quorum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mfcore::analyze;
    use crate::pmodel::pmodel_tau;
    use crate::synth::{generate_cascade, CascadeMode, CascadeSpec};

    fn cascade_member(id: &str, p: f64, seed: u64) -> (String, Vec<f64>) {
        let v = generate_cascade(&CascadeSpec {
            p,
            depth: 10,
            mode: CascadeMode::Randomized,
            seed,
        })
        .unwrap();
        (id.into(), v)
    }

    #[test]
    fn identical_members_collapse_to_individual() {
        let params = AnalyzeParams::default();
        let (_, v) = cascade_member("a", 0.4, 1);
        let single = analyze(&v, &params).unwrap();
        let members = vec![("a".to_string(), v.clone()), ("b".to_string(), v.clone())];
        let table = ensemble_from_series(&members, &params, DEFAULT_QUORUM).unwrap();
        // averaging n copies of x rounds once (n*x may be inexact), so the
        // collapse is exact only to the last ulp, not bitwise
        let close = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(a), Some(b)) => (a - b).abs() <= 1e-12 * a.abs().max(1.0),
            (None, None) => true,
            _ => false,
        };
        for (qi, row) in table.quenched_ln_chi.iter().enumerate() {
            for (si, cell) in row.iter().enumerate() {
                assert!(close(*cell, single.table.ln_chi[qi][si]));
                assert!(close(table.annealed_ln_chi[qi][si], single.table.ln_chi[qi][si]));
            }
        }
        let q = quenched_tau(&table, &params).unwrap();
        for (qi, t) in q.scaling.tau.iter().enumerate() {
            assert!(close(*t, single.scaling.tau[qi]));
        }
    }

    #[test]
    fn single_member_ensemble_is_bitwise_identity() {
        let params = AnalyzeParams::default();
        let (_, v) = cascade_member("solo", 0.35, 7);
        let single = analyze(&v, &params).unwrap();
        let table =
            ensemble_from_series(&[("solo".to_string(), v)], &params, DEFAULT_QUORUM).unwrap();
        assert_eq!(table.quenched_ln_chi, single.table.ln_chi);
        assert_eq!(table.annealed_ln_chi, single.table.ln_chi);
    }

    #[test]
    fn jensen_holds_cellwise() {
        let params = AnalyzeParams::default();
        let members: Vec<_> = (0..8)
            .map(|i| cascade_member(&format!("m{i}"), 0.3 + 0.02 * i as f64, i as u64))
            .collect();
        let table = ensemble_from_series(&members, &params, DEFAULT_QUORUM).unwrap();
        let mut checked = 0;
        for qi in 0..table.q_values.len() {
            for si in 0..table.box_sizes.len() {
                if let (Some(qc), Some(ac)) =
                    (table.quenched_ln_chi[qi][si], table.annealed_ln_chi[qi][si])
                {
                    assert!(ac >= qc - 1e-12, "q index {qi}, s index {si}: {ac} < {qc}");
                    checked += 1;
                }
            }
        }
        assert!(checked > 100);
    }

    #[test]
    fn member_order_does_not_matter() {
        let params = AnalyzeParams::default();
        let mut members: Vec<_> = (0..5)
            .map(|i| cascade_member(&format!("m{i}"), 0.32 + 0.03 * i as f64, 100 + i as u64))
            .collect();
        let forward = ensemble_from_series(&members, &params, DEFAULT_QUORUM).unwrap();
        members.reverse();
        let backward = ensemble_from_series(&members, &params, DEFAULT_QUORUM).unwrap();
        assert_eq!(forward.member_ids, backward.member_ids);
        assert_eq!(forward.quenched_ln_chi, backward.quenched_ln_chi);
        assert_eq!(forward.annealed_ln_chi, backward.annealed_ln_chi);
    }

    #[test]
    fn quenched_of_two_exact_cascades_averages_tau() {
        // deterministic cascades are exact power laws, so the slope of the
        // averaged logs is the average of the slopes
        let params = AnalyzeParams::default();
        let members: Vec<(String, Vec<f64>)> = [(0.35, "a"), (0.45, "b")]
            .iter()
            .map(|&(p, id)| {
                let v = generate_cascade(&CascadeSpec {
                    p,
                    depth: 12,
                    mode: CascadeMode::Deterministic,
                    seed: 0,
                })
                .unwrap();
                (id.to_string(), v)
            })
            .collect();
        let table = ensemble_from_series(&members, &params, DEFAULT_QUORUM).unwrap();
        let q = quenched_tau(&table, &params).unwrap();
        let qi = table.q_values.iter().position(|&x| x == 2.0).unwrap();
        let expect =
            0.5 * (pmodel_tau(0.35, 2.0).unwrap() + pmodel_tau(0.45, 2.0).unwrap());
        assert!((q.scaling.tau[qi].unwrap() - expect).abs() < 1e-6);
    }

    #[test]
    fn quorum_masks_sparse_cells() {
        // one member with an artificial undefined cell: at quorum 1.0 the
        // cell dies, at 0.5 it survives with count 1... build two members
        // by hand
        let qv = vec![0.0, 1.0];
        let sz = vec![1usize, 2, 4, 8, 16, 32];
        let full: Vec<Vec<Option<f64>>> =
            (0..2).map(|_| sz.iter().map(|&s| Some(s as f64)).collect()).collect();
        let mut sparse = full.clone();
        sparse[0][0] = None;
        let members = vec![
            MemberAnalysis {
                id: "a".into(),
                q_values: qv.clone(),
                box_sizes: sz.clone(),
                analyzed_length: 128,
                ln_chi: full,
            },
            MemberAnalysis {
                id: "b".into(),
                q_values: qv.clone(),
                box_sizes: sz.clone(),
                analyzed_length: 128,
                ln_chi: sparse,
            },
        ];
        let strict = align_members(members.clone(), 1.0).unwrap();
        assert_eq!(strict.member_count_per_cell[0][0], 1);
        assert!(strict.quenched_ln_chi[0][0].is_none());
        let lax = align_members(members, 0.5).unwrap();
        assert!(lax.quenched_ln_chi[0][0].is_some());
    }

    #[test]
    fn grid_intersection_and_errors() {
        let a = MemberAnalysis {
            id: "a".into(),
            q_values: vec![0.0, 1.0, 2.0],
            box_sizes: vec![1, 2, 4],
            analyzed_length: 64,
            ln_chi: vec![vec![Some(1.0); 3]; 3],
        };
        let b = MemberAnalysis {
            id: "b".into(),
            q_values: vec![0.0, 1.0],
            box_sizes: vec![2, 4, 8],
            analyzed_length: 64,
            ln_chi: vec![vec![Some(2.0); 3]; 2],
        };
        let t = align_members(vec![a.clone(), b], 0.5).unwrap();
        assert_eq!(t.q_values, vec![0.0, 1.0]);
        assert_eq!(t.box_sizes, vec![2, 4]);

        let disjoint = MemberAnalysis {
            id: "c".into(),
            q_values: vec![0.0, 1.0],
            box_sizes: vec![16, 32],
            analyzed_length: 64,
            ln_chi: vec![vec![Some(0.0); 2]; 2],
        };
        assert!(align_members(vec![a, disjoint], 0.5).is_err());
        assert!(align_members(vec![], 0.5).is_err());
    }
}
