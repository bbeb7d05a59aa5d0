mod common;

use gbm_fusion::{compose_regions, decompose_regions, staple_regions, Geometry, LabelVolume, StapleConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Three methods corrupting the WT/TC/ET masks of a phantom independently.
fn noisy_methods(truth: &LabelVolume, rng: &mut ChaCha8Rng) -> Vec<LabelVolume> {
    let regions = compose_regions(truth);
    (0..3)
        .map(|_| {
            let wt = common::noisy_rater(&regions.wt, 0.9, 0.97, rng);
            let tc = common::noisy_rater(&regions.tc, 0.9, 0.97, rng);
            let et = common::noisy_rater(&regions.et, 0.9, 0.97, rng);
            decompose_regions(&et, &tc, &wt).unwrap()
        })
        .collect()
}

#[test]
fn staple_beats_each_method_on_most_seeds() {
    let truth = common::tumour_phantom(Geometry::isotropic([32; 3]).unwrap(), [15.5; 3], [12.0, 8.0, 4.0]);
    let truth_wt = compose_regions(&truth).wt;
    let mut wins = 0;
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let methods = noisy_methods(&truth, &mut rng);
        let fused = staple_regions::<f64>(&methods, &StapleConfig::default()).unwrap();
        let fused_dice = common::dice_percent(&compose_regions(&fused).wt, &truth_wt);
        let best_single = methods
            .iter()
            .map(|m| common::dice_percent(&compose_regions(m).wt, &truth_wt))
            .fold(f64::MIN, f64::max);
        if fused_dice >= best_single {
            wins += 1;
        }
    }
    assert!(wins >= 15, "fused WT Dice beat every method on only {wins}/20 seeds");
}

#[test]
fn single_and_double_precision_agree() {
    let truth = common::tumour_phantom(Geometry::isotropic([24; 3]).unwrap(), [11.5; 3], [9.0, 6.0, 3.0]);
    let methods = noisy_methods(&truth, &mut ChaCha8Rng::seed_from_u64(99));
    let a = staple_regions::<f64>(&methods, &StapleConfig::default()).unwrap();
    let b = staple_regions::<f32>(&methods, &StapleConfig::default()).unwrap();
    let diff = a.labels().iter().zip(b.labels()).filter(|(x, y)| x != y).count();
    assert!(diff <= a.len() / 1000, "{diff} voxels differ");
}
