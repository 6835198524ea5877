use aigsage_core::aig::eval_lit;
use aigsage_core::netgen::{gen_booth_multiplier, gen_csa_multiplier, simulate_product, AdderKind};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

fn mask(bits: usize) -> u128 {
    if bits >= 128 {
        u128::MAX
    } else {
        (1u128 << bits) - 1
    }
}

fn operand_pairs(bits: usize, count: usize, seed: u64) -> Vec<(u64, u64)> {
    if bits <= 6 {
        let m = 1u64 << bits;
        return (0..m).flat_map(|x| (0..m).map(move |y| (x, y))).collect();
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let lim = if bits == 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    };
    (0..count)
        .map(|_| (rng.random::<u64>() & lim, rng.random::<u64>() & lim))
        .collect()
}

fn sign_extend(x: u64, bits: usize) -> i128 {
    let shift = 128 - bits;
    ((x as i128) << shift) >> shift
}

#[test]
fn csa_matches_unsigned_product() {
    for bits in (1..=16).chain([24, 32]) {
        let (aig, _) = gen_csa_multiplier(bits).unwrap();
        let pairs = operand_pairs(bits, 1000, bits as u64);
        let got = simulate_product(&aig, bits, &pairs);
        for (&(x, y), g) in pairs.iter().zip(got) {
            assert_eq!(
                g,
                (x as u128 * y as u128) & mask(2 * bits),
                "bits={bits} {x}*{y}"
            );
        }
    }
}

#[test]
fn booth_matches_signed_product() {
    for bits in (2..=16).chain([24, 32, 33]) {
        let (aig, _) = gen_booth_multiplier(bits).unwrap();
        let pairs = operand_pairs(bits, 1000, 100 + bits as u64);
        let got = simulate_product(&aig, bits, &pairs);
        for (&(x, y), g) in pairs.iter().zip(got) {
            let expect = sign_extend(x, bits) * sign_extend(y, bits);
            assert_eq!(g, (expect as u128) & mask(2 * bits), "bits={bits} {x}*{y}");
        }
    }
}

#[test]
fn recorded_adders_compute_parity_and_majority() {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(7);
    for (aig, adders) in [
        gen_csa_multiplier(8).unwrap(),
        gen_booth_multiplier(8).unwrap(),
    ] {
        assert!(!adders.adders.is_empty());
        let words: Vec<u64> = (0..aig.num_inputs()).map(|_| rng.random()).collect();
        let values = aig.simulate_nodes(&words);
        for a in &adders.adders {
            let ins: Vec<u64> = a.inputs.iter().map(|&l| eval_lit(&values, l)).collect();
            let parity = ins.iter().fold(0, |acc, w| acc ^ w);
            let majority = match a.kind {
                AdderKind::Half => ins[0] & ins[1],
                AdderKind::Full => (ins[0] & ins[1]) | (ins[0] & ins[2]) | (ins[1] & ins[2]),
            };
            assert_eq!(eval_lit(&values, a.sum), parity);
            assert_eq!(eval_lit(&values, a.carry), majority);
        }
    }
}

#[test]
fn csa_size_grows_quadratically() {
    let sizes: Vec<(f64, f64)> = [16usize, 32, 64, 128]
        .iter()
        .map(|&n| {
            let (aig, _) = gen_csa_multiplier(n).unwrap();
            ((n as f64).ln(), (aig.stats().num_nodes as f64).ln())
        })
        .collect();
    let k = sizes.len() as f64;
    let mx = sizes.iter().map(|p| p.0).sum::<f64>() / k;
    let my = sizes.iter().map(|p| p.1).sum::<f64>() / k;
    let slope = sizes.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / sizes.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((1.9..=2.1).contains(&slope), "fitted exponent {slope}");
}
