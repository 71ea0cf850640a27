//! Weights that give `K = E W Eᵀ` a chosen spectrum, and the four critical
//! points of the attitude-error potential.

use nalgebra::SymmetricEigen;
use so3me::measurements::default_catalog;
use so3me::wahba::{critical_points, potential_error, s_k, DirectionEnsemble, TargetEigenvalues, WeightedEnsemble};

fn main() {
    let catalog = default_catalog();
    for k in [3, 5, 9] {
        let ensemble = DirectionEnsemble::from_directions(&catalog[..k]).unwrap();
        let set = WeightedEnsemble::new(ensemble, TargetEigenvalues::new([30.0, 20.0, 10.0]).unwrap()).unwrap();
        let spectrum = SymmetricEigen::new(*set.k.matrix()).eigenvalues;
        println!("{k} directions: eig(K) = {:.12?}", spectrum.as_slice());
        println!(
            "  W is {}x{}, smallest singular value of E {:.4}",
            set.weights.len(),
            set.weights.len(),
            set.ensemble.smallest_singular_value()
        );
    }

    let ensemble = DirectionEnsemble::from_directions(&catalog[..4]).unwrap();
    let set = WeightedEnsemble::new(ensemble, TargetEigenvalues::default()).unwrap();
    for (i, q) in critical_points(&set.k).iter().enumerate() {
        println!(
            "Q{i}: potential {:10.6}, |S_K| {:.1e}, trace {:+.3}",
            potential_error(q, &set.k),
            s_k(q, &set.k).norm(),
            q.trace()
        );
    }
}
