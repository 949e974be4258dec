//! Every metric against its counting oracle.

use super::{brute_apcer_per_type, brute_eer, brute_rates, brute_tdr, mann_whitney_auc};
use hgcnn::metrics::{apcer_bpcer_acer, auc, eer, hter, tdr_at_fdr, ScoreSet, Threshold};

pub const FDR_GRID: [f64; 4] = [0.01, 0.05, 0.10, 0.20];

/// Compares every metric on `s` with its counting oracle.
pub fn check_against_oracles(s: &ScoreSet, probe: f64) -> Result<(), String> {
    let e = eer(s).map_err(|e| e.to_string())?;
    let (rate, exact) = brute_eer(s);
    if (exact && e.rate != rate) || (e.rate - rate).abs() > 1e-12 {
        return Err(format!("EER {} vs oracle {rate}", e.rate));
    }

    let th = Threshold::fixed(probe);
    let (far, frr) = brute_rates(s, probe);
    let h = hter(s, &th).map_err(|e| e.to_string())?;
    if h != (far + frr) / 2.0 {
        return Err(format!("HTER {h} vs {}", (far + frr) / 2.0));
    }
    let rep = apcer_bpcer_acer(s, &th).map_err(|e| e.to_string())?;
    if rep.apcer != far || rep.bpcer != frr || rep.acer != (far + frr) / 2.0 {
        return Err(format!("APCER/BPCER {rep:?} vs {far} {frr}"));
    }
    let per_type = brute_apcer_per_type(s, probe);
    if rep.apcer_per_type != per_type {
        return Err(format!("per-type APCER {:?} vs {per_type:?}", rep.apcer_per_type));
    }
    let worst = per_type.values().copied().fold(0.0, f64::max);
    if rep.apcer_max != worst {
        return Err("max-over-types APCER".into());
    }

    let a = auc(s).map_err(|e| e.to_string())?;
    let u = mann_whitney_auc(s);
    if (a - u).abs() > 1e-12 {
        return Err(format!("AUC {a} vs U statistic {u}"));
    }

    let tdr = tdr_at_fdr(s, &FDR_GRID).map_err(|e| e.to_string())?;
    for (&f, &got) in FDR_GRID.iter().zip(&tdr) {
        let (want, exact) = brute_tdr(s, f);
        if (exact && got != want) || (got - want).abs() > 1e-12 {
            return Err(format!("TDR@{f} {got} vs oracle {want}"));
        }
    }
    Ok(())
}
