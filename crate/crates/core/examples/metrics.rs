// Ranking metrics with ties, and the mean ± σ summary used in reports.

use hetlink::eval::{auc_roc, average_precision, mean_std};

pub fn run_example() -> hetlink::Result<()> {
    let scores = [0.9, 0.8, 0.8, 0.4, 0.3, 0.1];
    let labels = [true, false, true, true, false, false];
    println!("AP      {:.4}", average_precision(&scores, &labels)?);
    println!("AUC-ROC {:.4}", auc_roc(&scores, &labels)?);

    // ties are ranked in input order for AP and count one half for AUC
    let swapped = [true, true, false, true, false, false];
    println!("AP with the tie swapped {:.4}", average_precision(&scores, &swapped)?);

    let (m, s) = mean_std(&[0.91, 0.93, 0.90, 0.92, 0.94]);
    println!("{:.2} ± {:.2}", 100.0 * m, 100.0 * s);
    Ok(())
}

#[allow(dead_code)]
fn main() -> hetlink::Result<()> {
    run_example()
}
