//! Runs every detector on a chain-length toxicity series with two regime
//! shifts.

use toxchain::cpd::{CostFunction, Detector, Method, Signal, Stopping};

fn main() -> toxchain::Result<()> {
    let series = [
        0.05, 0.08, 0.04, 0.06, 0.07, 0.05, 0.09, 0.62, 0.71, 0.85, 0.93, 0.78, 0.66, 0.70, 0.12,
        0.09, 0.06, 0.08, 0.05, 0.07, 0.04,
    ];
    let signal = Signal::univariate(&series)?;

    for method in Method::ALL {
        let (cps, stopping) = Detector::new(method, CostFunction::rbf()).detect(&signal)?;
        println!("{:<9} {:?} with {stopping:?}", method.name(), cps.change_points());
    }
    let (cps, _) = Detector::new(Method::KernelCpd, CostFunction::rbf())
        .with_stopping(Stopping::NBkps(2))
        .detect(&signal)?;
    println!("kernelcpd with exactly two change points: {:?}", cps.change_points());
    let (cps, _) = Detector::new(Method::Pelt, CostFunction::L2)
        .with_stopping(Stopping::Penalty(0.1))
        .with_min_size(3)
        .detect(&signal)?;
    println!("pelt/l2, penalty 0.1, min_size 3: {:?}", cps.change_points());
    Ok(())
}
