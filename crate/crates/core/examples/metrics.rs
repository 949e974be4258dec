//! Anti-spoofing metrics on a hand-made score list.
//!
//! ```text
//! cargo run --example metrics
//! ```

use hgcnn::metrics::{eer, roc_curve, MetricsReport, ScoreRecord, ScoreSet, Threshold};

fn record(score: f64, attack: Option<&str>) -> ScoreRecord {
    ScoreRecord {
        id: format!("s{score}"),
        subject: "s000".into(),
        genuine: attack.is_none(),
        attack_type: attack.map(String::from),
        score,
    }
}

fn main() -> hgcnn::Result<()> {
    let dev = ScoreSet::from_pairs([(0.95, true), (0.8, true), (0.55, true), (0.6, false), (0.3, false), (0.1, false)]);
    let test = ScoreSet::new(vec![
        record(0.97, None),
        record(0.91, None),
        record(0.62, None),
        record(0.40, None),
        record(0.70, Some("print")),
        record(0.20, Some("print")),
        record(0.58, Some("replay")),
        record(0.05, Some("replay")),
        record(0.15, Some("mask")),
        record(0.35, Some("mask")),
    ]);

    for p in roc_curve(&dev)? {
        println!("threshold {:>5.2}  fdr {:.3}  tdr {:.3}", p.threshold, p.fdr, p.tdr);
    }
    let e = eer(&dev)?;
    println!("dev EER {:.3} at {:.4}", e.rate, e.threshold);

    // The operating point comes from dev and is applied unchanged to test.
    let report = MetricsReport::compute(&test, Threshold::from_dev(&dev)?, &[0.01, 0.1, 0.2])?;
    println!("{}", serde_json::to_string_pretty(&report)?);

    let mut csv = Vec::new();
    test.write_csv(&mut csv)?;
    print!("{}", String::from_utf8_lossy(&csv));
    Ok(())
}
