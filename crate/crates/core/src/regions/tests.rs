use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::prob::entropy;

fn d(v: &[f64]) -> FiniteDist {
    FiniteDist::new(v.to_vec()).unwrap()
}

fn rp(x: f64, y: f64) -> RatePair {
    RatePair { r_x: x, r_y: y }
}

/// Sutherland–Hodgman: clip `subject` by the convex counterclockwise `clip`.
fn clip_convex(subject: &[(f64, f64)], clip: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = subject.to_vec();
    for i in 0..clip.len() {
        let (a, b) = (clip[i], clip[(i + 1) % clip.len()]);
        let side = |p: (f64, f64)| (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
        let input = std::mem::take(&mut out);
        for j in 0..input.len() {
            let (p, q) = (input[j], input[(j + 1) % input.len()]);
            let (sp, sq) = (side(p), side(q));
            if sp >= 0.0 {
                out.push(p);
            }
            if (sp >= 0.0) != (sq >= 0.0) {
                let t = sp / (sp - sq);
                out.push((p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1)));
            }
        }
        if out.is_empty() {
            break;
        }
    }
    out
}

fn in_convex(poly: &[(f64, f64)], p: (f64, f64)) -> bool {
    poly.len() >= 3
        && (0..poly.len()).all(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
            (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0) >= 0.0
        })
}

/// Convex pieces (strip, pentagon) of an X-decoder region.
fn pieces(b: &RegionBounds, clip: f64) -> Vec<Vec<(f64, f64)>> {
    vec![
        vec![(0.0, 0.0), (b.a, 0.0), (b.a, clip), (0.0, clip)],
        vec![(0.0, 0.0), (b.b, 0.0), (b.b, b.c - b.b), (0.0, b.c)],
    ]
}

fn transpose_pts(v: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut t: Vec<_> = v.iter().map(|&(x, y)| (y, x)).collect();
    t.reverse();
    t
}

fn random_point<R: Rng>(rng: &mut R, ext: f64) -> (f64, f64) {
    (rng.gen::<f64>() * ext, rng.gen::<f64>() * ext)
}

#[test]
fn noiseless_x_channel_gives_strip() {
    let w = ChannelKernel::from_fn(2, 2, 2, |x, _, z| (x == z) as u8 as f64).unwrap();
    let px = d(&[0.3, 0.7]);
    let r = region_x(&px, &d(&[0.5, 0.5]), &w).unwrap();
    let h = entropy(&px);
    let clip = region_clip(2, 2);
    assert!(r.open_ry && !r.open_rx);
    assert_eq!(r.vertices().len(), 4);
    assert!((r.area() - h * clip).abs() < 1e-12);
    assert!(r.contains(rp(h - 0.01, 2.5), Membership::Strict));
    assert!(!r.contains(rp(h + 0.01, 0.0), Membership::Closed));
}

#[test]
fn xor_channel_gives_triangle() {
    let w = ChannelKernel::from_fn(2, 2, 2, |x, y, z| ((x ^ y) == z) as u8 as f64).unwrap();
    let u = d(&[0.5, 0.5]);
    let r = region_x(&u, &u, &w).unwrap();
    assert!(!r.open_ry);
    let v = r.vertices();
    assert_eq!(v.len(), 3);
    for (p, q) in v.iter().zip(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]) {
        assert!((p.0 - q.0).abs() < 1e-12 && (p.1 - q.1).abs() < 1e-12, "{v:?}");
    }
}

#[test]
fn membership_matches_direct_inequalities() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..5 {
        let w = ChannelKernel::random(2, 2, 3, &mut rng);
        let (px, py) = (FiniteDist::random(2, &mut rng), FiniteDist::random(2, &mut rng));
        let b = RegionBounds::from_info(&info_quantities(&JointDist3::product(&px, &py, &w).unwrap()));
        let r = region_x(&px, &py, &w).unwrap();
        let mut agree = 0;
        for _ in 0..10_000 {
            let p = random_point(&mut rng, 1.5);
            let direct = b.contains(rp(p.0, p.1));
            if direct == r.contains_point(p, Membership::Strict) {
                agree += 1;
            } else {
                assert!(r.boundary_distance(p) < 1e-9);
            }
        }
        assert!(agree as f64 >= 0.999 * 10_000.0);
    }
}

#[test]
fn region_y_is_transpose_for_symmetric_pair() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let w = ChannelKernel::random(2, 2, 2, &mut rng);
    let w_tilde = w.swap_inputs();
    let (p, q) = (d(&[0.3, 0.7]), d(&[0.8, 0.2]));
    let ry = region_y(&p, &q, &w_tilde).unwrap();
    let rx = region_x(&q, &p, &w).unwrap().transpose();
    for _ in 0..2000 {
        let pt = random_point(&mut rng, 1.2);
        if rx.boundary_distance(pt) > 1e-9 {
            assert_eq!(ry.contains_point(pt, Membership::Strict), rx.contains_point(pt, Membership::Strict));
        }
    }
}

#[test]
fn useless_receiver_gives_empty_region() {
    let w_tilde = ChannelKernel::from_fn(2, 2, 2, |_, _, _| 0.5).unwrap();
    let r = region_y(&d(&[0.5, 0.5]), &d(&[0.5, 0.5]), &w_tilde).unwrap();
    assert!(r.is_empty());
    assert!(!r.contains(rp(0.0, 0.0), Membership::Closed));
}

#[test]
fn intersection_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let w = ChannelKernel::random(2, 2, 2, &mut rng);
    let a = region_x(&d(&[0.4, 0.6]), &d(&[0.5, 0.5]), &w).unwrap();
    let same = intersect_regions(&a, &a);
    assert!((same.area() - a.area()).abs() < 1e-12);
    for _ in 0..1000 {
        let p = random_point(&mut rng, 1.2);
        if a.boundary_distance(p) > 1e-9 {
            assert_eq!(same.contains_point(p, Membership::Strict), a.contains_point(p, Membership::Strict));
        }
    }
    let thin = RegionPolygon::from_vertices(vec![(0.0, 0.0), (0.0, 0.0), (0.0, 2.0), (0.0, 2.0)], false, true).unwrap();
    assert!(thin.is_empty());
    assert!(intersect_regions(&a, &thin).is_empty());
}

#[test]
fn intersection_matches_half_plane_clipping() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for _ in 0..5 {
        let w = ChannelKernel::random(2, 2, 2, &mut rng);
        let w_tilde = ChannelKernel::random(2, 2, 2, &mut rng);
        let (px, py) = (FiniteDist::random(2, &mut rng), FiniteDist::random(2, &mut rng));
        let clip = region_clip(2, 2);
        let bx = RegionBounds::from_info(&info_quantities(&JointDist3::product(&px, &py, &w).unwrap()));
        let by = RegionBounds::from_info(&info_quantities(&JointDist3::product(&py, &px, &w_tilde.swap_inputs()).unwrap()));
        let xs = pieces(&bx, clip);
        let ys: Vec<_> = pieces(&by, clip).iter().map(|p| transpose_pts(p)).collect();
        let mut oracle = Vec::new();
        for a in &xs {
            for b in &ys {
                oracle.push(clip_convex(a, b));
            }
        }
        let got = region_xy(&px, &py, &w, &w_tilde).unwrap();
        let mut agree = 0;
        for _ in 0..10_000 {
            let p = random_point(&mut rng, 1.2);
            let want = oracle.iter().any(|o| in_convex(o, p));
            if want == got.contains_point(p, Membership::Closed) {
                agree += 1;
            }
        }
        assert!(agree as f64 >= 0.999 * 10_000.0, "{agree}");
    }
}

#[test]
fn timeshare_region_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(45);
    let w = ChannelKernel::random(2, 2, 2, &mut rng);
    let (p1, q1, p2, q2) = (d(&[0.2, 0.8]), d(&[0.6, 0.4]), d(&[0.7, 0.3]), d(&[0.1, 0.9]));
    let single = TimeShareProfile::single(p1.clone(), q1.clone());
    assert_eq!(region_x_timeshare(&single, &w).unwrap(), region_x(&p1, &q1, &w).unwrap());

    let mix = TimeShareProfile::even_mix((p1.clone(), q1.clone()), (p2.clone(), q2.clone())).unwrap();
    let b = timeshare_bounds(&mix, &w).unwrap();
    let i1 = info_quantities(&JointDist3::product(&p1, &q1, &w).unwrap());
    let i2 = info_quantities(&JointDist3::product(&p2, &q2, &w).unwrap());
    assert!((b.a - 0.5 * (i1.i_x_z + i2.i_x_z)).abs() < 1e-12);
    assert!((b.b - 0.5 * (i1.i_x_z_given_y + i2.i_x_z_given_y)).abs() < 1e-12);
    assert!((b.c - 0.5 * (i1.i_xy_z + i2.i_xy_z)).abs() < 1e-12);

    let zero = TimeShareProfile::new(d(&[1.0, 0.0]), vec![p1.clone(), p2], vec![q1.clone(), q2]).unwrap();
    assert_eq!(region_x_timeshare(&zero, &w).unwrap(), region_x(&p1, &q1, &w).unwrap());
}

#[test]
fn hull_identities() {
    let tri = RegionPolygon::from_vertices(vec![(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)], false, false).unwrap();
    let h = convex_hull_union(std::slice::from_ref(&tri)).unwrap();
    assert_eq!(h, tri);
    let small = RegionPolygon::from_vertices(vec![(0.0, 0.0), (0.3, 0.0), (0.3, 0.2), (0.0, 0.4)], false, false).unwrap();
    let h = convex_hull_union(&[small, tri.clone()]).unwrap();
    assert_eq!(h, tri);
    assert!(convex_hull_union(&[]).is_err());
}

#[test]
fn hull_of_mirrored_regions_uses_both() {
    let a = RegionPolygon::from_vertices(vec![(0.0, 0.0), (0.8, 0.0), (0.8, 0.1), (0.2, 0.3), (0.0, 0.3)], false, false).unwrap();
    let b = a.transpose();
    let h = convex_hull_union(&[a.clone(), b.clone()]).unwrap();
    let has = |p: (f64, f64)| h.vertices().iter().any(|v| (v.0 - p.0).abs() < 1e-12 && (v.1 - p.1).abs() < 1e-12);
    assert!(has((0.8, 0.1)) && has((0.1, 0.8)), "{:?}", h.vertices());
    for v in a.vertices().iter().chain(b.vertices()) {
        assert!(h.contains_point(*v, Membership::Closed));
    }
}

#[test]
fn no_witness_without_interference_or_with_identical_pairs() {
    let w = ChannelKernel::from_fn(2, 2, 2, |x, _, z| if x == z { 0.9 } else { 0.1 }).unwrap();
    let w_tilde = ChannelKernel::from_fn(2, 2, 2, |_, y, z| if y == z { 0.9 } else { 0.1 }).unwrap();
    let (p, q) = (d(&[0.3, 0.7]), d(&[0.6, 0.4]));
    let opts = WitnessOptions::default();
    assert!(find_timeshare_gap_witness((&p, &q), (&q, &p), &w, &w_tilde, opts).unwrap().is_none());

    let mut rng = ChaCha8Rng::seed_from_u64(46);
    let w = ChannelKernel::random(2, 2, 2, &mut rng);
    assert!(find_timeshare_gap_witness((&p, &q), (&p, &q), &w, &w.swap_inputs(), opts).unwrap().is_none());
}

#[test]
fn xy_region_transpose_symmetry() {
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    let w = ChannelKernel::random(2, 2, 2, &mut rng);
    let w_tilde = w.swap_inputs();
    let (p, q) = (d(&[0.25, 0.75]), d(&[0.55, 0.45]));
    let a = region_xy(&p, &q, &w, &w_tilde).unwrap();
    let b = region_xy(&q, &p, &w, &w_tilde).unwrap().transpose();
    for _ in 0..5000 {
        let pt = random_point(&mut rng, 1.2);
        if a.boundary_distance(pt) > 1e-9 {
            assert_eq!(a.contains_point(pt, Membership::Strict), b.contains_point(pt, Membership::Strict));
        }
    }
}

#[test]
fn uniform_timesharing_dominates_simple() {
    let mut rng = ChaCha8Rng::seed_from_u64(48);
    let w = ChannelKernel::random(2, 2, 2, &mut rng);
    let w_tilde = ChannelKernel::random(2, 2, 2, &mut rng);
    let pairs: Vec<(FiniteDist, FiniteDist)> = (0..4).map(|_| (FiniteDist::random(2, &mut rng), FiniteDist::random(2, &mut rng))).collect();
    let singles: Vec<_> = pairs.iter().map(|(p, q)| region_xy(p, q, &w, &w_tilde).unwrap()).collect();
    let mut ts = singles.clone();
    for i in 0..pairs.len() {
        for j in i + 1..pairs.len() {
            let prof = TimeShareProfile::even_mix(pairs[i].clone(), pairs[j].clone()).unwrap();
            ts.push(region_xy_timeshare(&prof, &w, &w_tilde).unwrap());
        }
    }
    let simple = convex_hull_union(&singles).unwrap();
    let uniform = convex_hull_union(&ts).unwrap();
    for _ in 0..5000 {
        let pt = random_point(&mut rng, 1.2);
        if simple.contains_point(pt, Membership::Strict) {
            assert!(uniform.contains_point(pt, Membership::Closed));
        }
    }
}

#[test]
fn margin_sign_matches_membership() {
    let b = RegionBounds { a: 0.2, b: 0.5, c: 0.7 };
    assert!(b.margin(rp(0.1, 5.0)) > 0.0 && b.contains(rp(0.1, 5.0)));
    assert!(b.margin(rp(0.4, 0.2)) > 0.0 && b.contains(rp(0.4, 0.2)));
    assert!(b.margin(rp(0.4, 0.4)) < 0.0 && !b.contains(rp(0.4, 0.4)));
    assert!(b.margin(rp(0.6, 0.0)) < 0.0);
}
