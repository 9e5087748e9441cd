//! Compares detected change points with a three-annotator consensus.

use toxchain::cpd::ChangePointSet;
use toxchain::evaluation::{aggregate_report, evaluate_chain, majority_vote, AnnotationSet, Metric};

fn main() -> toxchain::Result<()> {
    let mut annotations = AnnotationSet::new("ep#12", 21);
    annotations.add("ann-1", vec![7, 14])?;
    annotations.add("ann-2", vec![7])?;
    annotations.add("ann-3", vec![8, 14, 18])?;
    let consensus = majority_vote(&annotations, annotations.default_quorum());
    println!("consensus at quorum {}: {consensus:?}", annotations.default_quorum());

    let rows = vec![
        evaluate_chain("ep#12", "pelt", &ChangePointSet::from_change_points(&[7, 14], 21)?, &consensus)?,
        evaluate_chain("ep#12", "binseg", &ChangePointSet::from_change_points(&[10], 21)?, &consensus)?,
    ];
    let report = aggregate_report(&rows);
    for method in ["pelt", "binseg"] {
        for metric in Metric::table_order() {
            if let Some(agg) = report.get(method, metric) {
                let label = match metric.margin() {
                    Some(m) => format!("{}@{m}", metric.name()),
                    None => metric.name().to_string(),
                };
                println!("{method:<7} {label:<12} {:.3}", agg.mean);
            }
        }
    }
    Ok(())
}
