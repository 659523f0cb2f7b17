use std::fmt::Write as _;

use anyhow::{Context, Result};
use mfpart_core::report::{AnalysisDocument, EnsembleDocument, PModelBatchDocument};
use mfpart_core::MfError;

use crate::util::read_json;
use crate::{ExportArgs, ExportKind};

pub fn run(args: &ExportArgs) -> Result<i32> {
    let value: serde_json::Value = read_json(&args.doc)?;
    let text = match args.kind {
        ExportKind::ChiVsS => chi_vs_s(&as_analysis(&value)?),
        ExportKind::TauVsQ => {
            if is_ensemble(&value) {
                tau_vs_q_ensemble(&as_ensemble(&value)?)
            } else {
                tau_vs_q(&as_analysis(&value)?)
            }
        }
        ExportKind::FVsAlpha => {
            if is_ensemble(&value) {
                f_vs_alpha_ensemble(&as_ensemble(&value)?)
            } else {
                f_vs_alpha(&as_analysis(&value)?)
            }
        }
        ExportKind::GpHist => gp_hist(&as_pmodel_batch(&value)?),
    };
    std::fs::write(&args.out, text)
        .with_context(|| format!("writing {}", args.out.display()))?;
    Ok(0)
}

fn is_ensemble(v: &serde_json::Value) -> bool {
    v.get("quenched").is_some() && v.get("annealed").is_some()
}

fn as_analysis(v: &serde_json::Value) -> Result<AnalysisDocument> {
    if v.get("grid").is_none() || v.get("ln_chi").is_none() {
        return Err(usage("expected an analysis document (grid + ln_chi)"));
    }
    Ok(serde_json::from_value(v.clone()).map_err(MfError::from)?)
}

fn as_ensemble(v: &serde_json::Value) -> Result<EnsembleDocument> {
    Ok(serde_json::from_value(v.clone()).map_err(MfError::from)?)
}

fn as_pmodel_batch(v: &serde_json::Value) -> Result<PModelBatchDocument> {
    if v.get("histogram").is_none() {
        return Err(usage("expected a batch p-model document (histogram)"));
    }
    Ok(serde_json::from_value(v.clone()).map_err(MfError::from)?)
}

fn usage(reason: &str) -> anyhow::Error {
    MfError::InvalidParameter { name: "doc", reason: reason.into() }.into()
}

fn cell(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// One column per q != 1 holding chi_q(s)^(1/(q-1)), the quantity whose
/// log-log slope is the generalized dimension D_q.
fn chi_vs_s(doc: &AnalysisDocument) -> String {
    let mut out = String::from("s");
    let cols: Vec<usize> = (0..doc.grid.q_values.len())
        .filter(|&qi| doc.grid.q_values[qi] != 1.0)
        .collect();
    for &qi in &cols {
        write!(out, ",q={}", doc.grid.q_values[qi]).unwrap();
    }
    out.push('\n');
    for (si, &s) in doc.grid.box_sizes.iter().enumerate() {
        write!(out, "{s}").unwrap();
        for &qi in &cols {
            let q = doc.grid.q_values[qi];
            let v = doc.ln_chi[qi][si].map(|ln_chi| (ln_chi / (q - 1.0)).exp());
            write!(out, ",{}", cell(v)).unwrap();
        }
        out.push('\n');
    }
    out
}

fn tau_vs_q(doc: &AnalysisDocument) -> String {
    let mut out = String::from("q,tau,stderr,r2\n");
    for (qi, &q) in doc.grid.q_values.iter().enumerate() {
        writeln!(
            out,
            "{q},{},{},{}",
            cell(doc.scaling.tau[qi]),
            cell(doc.scaling.fit_stderr[qi]),
            cell(doc.scaling.fit_r2[qi]),
        )
        .unwrap();
    }
    out
}

fn tau_vs_q_ensemble(doc: &EnsembleDocument) -> String {
    let mut out = String::from("q,tau_quenched,tau_annealed\n");
    for (qi, &q) in doc.q_values.iter().enumerate() {
        writeln!(
            out,
            "{q},{},{}",
            cell(doc.quenched.scaling.tau[qi]),
            cell(doc.annealed.scaling.tau[qi]),
        )
        .unwrap();
    }
    out
}

fn f_vs_alpha(doc: &AnalysisDocument) -> String {
    let mut out = String::from("q,alpha,f\n");
    for (qi, &q) in doc.grid.q_values.iter().enumerate() {
        if doc.scaling.alpha[qi].is_none() {
            continue;
        }
        writeln!(out, "{q},{},{}", cell(doc.scaling.alpha[qi]), cell(doc.scaling.f_alpha[qi]))
            .unwrap();
    }
    out
}

fn f_vs_alpha_ensemble(doc: &EnsembleDocument) -> String {
    let mut out = String::from("q,alpha_quenched,f_quenched,alpha_annealed,f_annealed\n");
    for (qi, &q) in doc.q_values.iter().enumerate() {
        let (qa, qf) = (doc.quenched.scaling.alpha[qi], doc.quenched.scaling.f_alpha[qi]);
        let (aa, af) = (doc.annealed.scaling.alpha[qi], doc.annealed.scaling.f_alpha[qi]);
        if qa.is_none() && aa.is_none() {
            continue;
        }
        writeln!(out, "{q},{},{},{},{}", cell(qa), cell(qf), cell(aa), cell(af)).unwrap();
    }
    out
}

fn gp_hist(doc: &PModelBatchDocument) -> String {
    let mut out = String::from("bin_lo,bin_hi,frequency\n");
    let h = &doc.histogram;
    for (i, f) in h.frequencies.iter().enumerate() {
        writeln!(out, "{},{},{}", h.bin_edges[i], h.bin_edges[i + 1], f).unwrap();
    }
    out
}
