use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Graph, TensorId};

fn randn(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    // Box-Muller; plenty for test fixtures
    (0..n)
        .map(|_| {
            let u1: f64 = rng.gen_range(1e-9..1.0);
            let u2: f64 = rng.gen_range(0.0..1.0);
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        })
        .collect()
}

/// Checks analytic gradients of `build`'s scalar output against central
/// finite differences for every leaf, in f64.
fn check<F>(seed: u64, leaf_shapes: &[&[usize]], build: F)
where
    F: Fn(&mut Graph<f64>, &[TensorId]) -> TensorId,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let leaf_data: Vec<Vec<f64>> = leaf_shapes
        .iter()
        .map(|s| randn(&mut rng, s.iter().product()))
        .collect();

    let eval = |data: &[Vec<f64>]| -> f64 {
        let mut g = Graph::new();
        let leaves: Vec<TensorId> = data
            .iter()
            .zip(leaf_shapes)
            .map(|(d, s)| g.leaf(d.clone(), s, true))
            .collect();
        let out = build(&mut g, &leaves);
        g.data(out)[0]
    };

    let mut g = Graph::new();
    let leaves: Vec<TensorId> = leaf_data
        .iter()
        .zip(leaf_shapes)
        .map(|(d, s)| g.leaf(d.clone(), s, true))
        .collect();
    let out = build(&mut g, &leaves);
    assert_eq!(g.numel(out), 1, "gradcheck target must be scalar");
    let grads = g.backward(out);

    let h = 1e-5;
    for (li, leaf) in leaves.iter().enumerate() {
        let analytic = grads.get(*leaf).expect("missing leaf grad");
        for i in 0..leaf_data[li].len() {
            let mut plus = leaf_data.clone();
            plus[li][i] += h;
            let mut minus = leaf_data.clone();
            minus[li][i] -= h;
            let fd = (eval(&plus) - eval(&minus)) / (2.0 * h);
            let a = analytic[i];
            let denom = fd.abs().max(a.abs()).max(1e-6);
            assert!(
                (fd - a).abs() / denom < 1e-6,
                "leaf {li} elem {i}: analytic {a} vs fd {fd}"
            );
        }
    }
}

#[test]
fn elementwise_ops() {
    check(1, &[&[2, 3], &[2, 3]], |g, l| {
        let s = g.add(l[0], l[1]);
        let m = g.mul(s, l[0]);
        let d = g.sub(m, l[1]);
        let sq = g.square(d);
        g.mean_all(sq)
    });
    check(2, &[&[7]], |g, l| {
        let s = g.silu(l[0]);
        let a = g.abs(s);
        let sc = g.scale(a, 0.7);
        g.mean_all(sc)
    });
}

#[test]
fn matmul_and_bias() {
    check(3, &[&[3, 4], &[4, 5], &[5]], |g, l| {
        let y = g.matmul(l[0], l[1]);
        let y = g.add_row(y, l[2]);
        let y = g.square(y);
        g.mean_all(y)
    });
}

#[test]
fn bmm_softmax() {
    check(4, &[&[2, 3, 4], &[2, 4, 3]], |g, l| {
        let y = g.bmm(l[0], l[1]);
        let p = g.softmax_lastdim(y);
        let p2 = g.square(p);
        g.mean_all(p2)
    });
}

#[test]
fn conv2d_stride1_and_2() {
    check(5, &[&[2, 3, 6, 6], &[4, 3, 3, 3], &[4]], |g, l| {
        let y = g.conv2d(l[0], l[1], l[2], 1, 1);
        let y = g.silu(y);
        let y = g.square(y);
        g.mean_all(y)
    });
    check(6, &[&[1, 2, 6, 6], &[3, 2, 3, 3], &[3]], |g, l| {
        let y = g.conv2d(l[0], l[1], l[2], 2, 1);
        let y = g.square(y);
        g.mean_all(y)
    });
    check(7, &[&[1, 3, 4, 4], &[5, 3, 1, 1], &[5]], |g, l| {
        let y = g.conv2d(l[0], l[1], l[2], 1, 0);
        let y = g.square(y);
        g.mean_all(y)
    });
}

#[test]
fn norms() {
    check(8, &[&[2, 4, 3, 3], &[4], &[4]], |g, l| {
        let y = g.group_norm(l[0], 2, l[1], l[2], 1e-5);
        let y = g.square(y);
        g.mean_all(y)
    });
    check(9, &[&[5, 6], &[6], &[6]], |g, l| {
        let y = g.layer_norm(l[0], l[1], l[2], 1e-5);
        let y = g.square(y);
        g.mean_all(y)
    });
}

#[test]
fn shape_ops() {
    check(10, &[&[2, 3, 4], &[2, 3, 4]], |g, l| {
        let c = g.concat(l[0], l[1], 1);
        let p = g.permute(c, &[1, 0, 2]);
        let r = g.reshape(p, &[6, 8]);
        let s = g.square(r);
        g.mean_all(s)
    });
    check(11, &[&[1, 2, 3, 3]], |g, l| {
        let u = g.upsample_nearest_2x(l[0]);
        let s = g.square(u);
        g.mean_all(s)
    });
    check(12, &[&[2, 3, 4, 4], &[3]], |g, l| {
        let y = g.add_chan(l[0], l[1]);
        let y = g.square(y);
        g.mean_all(y)
    });
}

#[test]
fn concat_axis0_and_2() {
    check(13, &[&[2, 3], &[4, 3]], |g, l| {
        let c = g.concat(l[0], l[1], 0);
        let s = g.square(c);
        g.mean_all(s)
    });
    check(14, &[&[2, 2, 3], &[2, 2, 5]], |g, l| {
        let c = g.concat(l[0], l[1], 2);
        let s = g.square(c);
        g.mean_all(s)
    });
}

#[test]
fn gradients_flow_through_shared_subexpression() {
    // y = mean((a*a) + a) — a used twice, grads must accumulate
    check(15, &[&[3, 3]], |g, l| {
        let m = g.mul(l[0], l[0]);
        let s = g.add(m, l[0]);
        g.mean_all(s)
    });
}

#[test]
fn inference_graph_records_nothing() {
    let mut g: Graph<f32> = Graph::inference();
    let a = g.leaf(vec![1.0, 2.0], &[2], true);
    assert!(!g.requires_grad(a));
    let b = g.scale(a, 2.0);
    assert_eq!(g.data(b), &[2.0, 4.0]);
}

#[test]
fn matmul_matches_naive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let a = randn(&mut rng, 7 * 5);
    let b = randn(&mut rng, 5 * 6);
    let mut g: Graph<f64> = Graph::inference();
    let ta = g.constant(a.clone(), &[7, 5]);
    let tb = g.constant(b.clone(), &[5, 6]);
    let tc = g.matmul(ta, tb);
    let c = g.data(tc);
    for i in 0..7 {
        for j in 0..6 {
            let mut acc = 0.0;
            for k in 0..5 {
                acc += a[i * 5 + k] * b[k * 6 + j];
            }
            assert!((c[i * 6 + j] - acc).abs() < 1e-12);
        }
    }
}
