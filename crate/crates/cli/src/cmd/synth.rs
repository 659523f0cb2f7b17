use std::path::Path;

use anyhow::Result;
use mfpart_core::formats::{write_vol_binary, write_vol_csv};
use mfpart_core::ingest::VolatilitySeries;
use mfpart_core::synth::{generate_cascade, generate_iid_lognormal, CascadeMode, CascadeSpec};

use crate::{SynthCommand, SynthMode};

pub fn run(args: &SynthCommand) -> Result<i32> {
    let (values, id, out) = match args {
        SynthCommand::Cascade(a) => {
            let mode = match a.mode {
                SynthMode::Det => CascadeMode::Deterministic,
                SynthMode::Rand => CascadeMode::Randomized,
            };
            let spec = CascadeSpec { p: a.p, depth: a.depth, mode, seed: a.seed };
            let id = format!(
                "cascade-p{}-d{}-{}",
                a.p,
                a.depth,
                match a.mode {
                    SynthMode::Det => "det".to_string(),
                    SynthMode::Rand => format!("rand{}", a.seed),
                }
            );
            (generate_cascade(&spec)?, id, &a.out)
        }
        SynthCommand::Lognormal(a) => {
            let id = format!("lognormal-n{}-s{}", a.len, a.seed);
            (generate_iid_lognormal(a.len, a.mu, a.sigma, a.seed)?, id, &a.out)
        }
    };
    write_series(out, &VolatilitySeries::synthetic(id, values))?;
    Ok(0)
}

fn write_series(out: &Path, series: &VolatilitySeries) -> Result<()> {
    if out.extension().is_some_and(|e| e == "csv") {
        write_vol_csv(out, series, None)?;
    } else {
        write_vol_binary(out, series)?;
    }
    Ok(())
}
