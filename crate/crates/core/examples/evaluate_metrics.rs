//! Detection metrics from raw confusion counts and from scored frames:
//! TPR/FPR/precision/F1, frame versus window counting, and the area under
//! the precision-recall curve.
//!
//! cargo run --release --example evaluate_metrics

use laneguard::evalkit::{auc_prc, confusion_from_flags, pr_curve, rates, ConfusionCounts, Unit};

fn main() -> laneguard::Result<()> {
    let counts = ConfusionCounts::new(149, 304, 1970, 47);
    let r = rates(&counts)?;
    println!("counts {counts:?}");
    println!("tpr {:.3} fpr {:.3} f1 {:.3} precision {:.3}", r.tpr.unwrap(), r.fpr.unwrap(), r.f1.unwrap(), r.precision.unwrap());

    // A stream whose anomaly starts at frame 30; the detector fires late and
    // produces a few isolated false alarms.
    let truth: Vec<bool> = (0..60).map(|i| i >= 30).collect();
    let fired: Vec<bool> = (0..60).map(|i| i >= 34 || i % 23 == 5).collect();
    for unit in [Unit::Frame, Unit::Window(12)] {
        let c = confusion_from_flags(&truth, &fired, unit)?;
        let r = rates(&c)?;
        println!("{unit:?}: {c:?} tpr {:.3} fpr {:.3}", r.tpr.unwrap(), r.fpr.unwrap());
    }

    let scores = [0.9, 0.8, 0.7, 0.6, 0.55, 0.5, 0.4, 0.3, 0.2, 0.1];
    let labels = [true, true, false, true, false, true, false, false, false, false];
    for p in pr_curve(&scores, &labels)? {
        println!("threshold {:.2}: recall {:.2} precision {:.2}", p.threshold, p.recall, p.precision);
    }
    println!("auc-prc {:.4} at prevalence 0.4", auc_prc(&scores, &labels)?);
    Ok(())
}
