mod common;

use common::{eight_jumps, four_jumps, jump_system};
use orbitflag::hull::Membership;
use orbitflag::linalg::diag_real;
use orbitflag::simplex::build_projection;
use orbitflag::slc::{b_map, boundary_candidates, build_field_set, compute_a_iota, rasterize_region, slc_membership};
use orbitflag::{LindbladSystem, RVector, SeededRng};

const TOL: f64 = 1e-7;

#[test]
fn six_iota_flags_give_fifteen_arcs() {
    let mut r = SeededRng::new(7);
    let sys = r.gaussian_system(3, 3, 1.0);
    let set = compute_a_iota(&sys).unwrap();
    let fields = build_field_set(&sys, &set.flags, true).unwrap();
    assert_eq!(fields.entries.len(), 6);
    assert_eq!(fields.invertible().len(), 6);
    let arcs = boundary_candidates(&fields, 200).unwrap();
    assert_eq!(arcs.len(), 15);
    for arc in &arcs {
        assert_eq!(arc.samples.len(), 200);
        assert!(arc.max_residual() < 1e-8, "arc {} residual {}", arc.id, arc.max_residual());
        let (a, b) = (arc.subset[0], arc.subset[1]);
        let ends = [&arc.samples[0], arc.samples.last().unwrap()];
        // lattice order starts at s = (1, 0)
        let fa = fields.entries[a].field.fixed_point().unwrap();
        let fb = fields.entries[b].field.fixed_point().unwrap();
        assert!((&ends[0].x - fa).norm() < 1e-12);
        assert!((&ends[1].x - fb).norm() < 1e-12);
    }
}

#[test]
fn surface_count_for_four_levels() {
    let mut r = SeededRng::new(70);
    let sys = r.gaussian_system(4, 3, 1.0);
    let set = compute_a_iota(&sys).unwrap();
    let fields = build_field_set(&sys, &set.flags, true).unwrap();
    assert_eq!(fields.invertible().len(), 24);
    let surfaces = boundary_candidates(&fields, 6).unwrap();
    assert_eq!(surfaces.len(), 2024);
    assert!(surfaces.iter().all(|s| s.samples.len() == 21 || s.singular_samples > 0));
}

#[test]
fn b_map_residual_and_vertices() {
    let mut r = SeededRng::new(8);
    let sys = r.gaussian_system(3, 2, 1.0);
    let set = compute_a_iota(&sys).unwrap();
    let fields = build_field_set(&sys, &set.flags, true).unwrap();
    for j in 0..3 {
        let mut s = RVector::zeros(3);
        s[j] = 1.0;
        let x = b_map(&fields, &[0, 1, 2], &s).unwrap();
        let f = &fields.entries[j].field;
        assert!((&f.b + &f.a * &x).norm() < 1e-12);
    }
    for _ in 0..50 {
        let s = r.simplex_point(3);
        let x = b_map(&fields, &[0, 2, 4], &s).unwrap();
        let mut res = RVector::zeros(2);
        for (k, &j) in [0usize, 2, 4].iter().enumerate() {
            let f = &fields.entries[j].field;
            res += (&f.b + &f.a * &x) * s[k];
        }
        assert!(res.norm() < 1e-10);
    }
}

#[test]
fn interior_samples_and_arcs_classify_consistently() {
    let mut r = SeededRng::new(9);
    let sys = r.gaussian_system(3, 3, 1.0);
    let set = compute_a_iota(&sys).unwrap();
    let fields = build_field_set(&sys, &set.flags, true).unwrap();
    let idx = fields.invertible();
    let mut interior = 0;
    for _ in 0..200 {
        let pick: Vec<usize> = (0..3).map(|_| idx[(r.uniform() * idx.len() as f64) as usize]).collect();
        if pick[0] == pick[1] || pick[1] == pick[2] || pick[0] == pick[2] {
            continue;
        }
        let s = r.simplex_point(3);
        if s.min() < 1e-3 {
            continue;
        }
        let Ok(x) = b_map(&fields, &pick, &s) else { continue };
        let m = slc_membership(&fields, &x, TOL);
        // B_K(int T_s) lies in the closure of the region
        assert_ne!(m.class, Membership::Exterior);
        if m.class == Membership::Interior {
            interior += 1;
            if let Some((_, w)) = m.witness {
                assert!(w.iter().all(|&v| v > TOL));
            }
        }
    }
    assert!(interior > 0);
    for arc in boundary_candidates(&fields, 50).unwrap() {
        for sample in &arc.samples {
            assert_ne!(slc_membership(&fields, &sample.x, 10.0 * TOL).class, Membership::Exterior);
        }
    }
}

#[test]
fn dephasing_region_is_empty() {
    let sys = LindbladSystem::new(3, vec![diag_real(&[1.0, 0.0, -1.0])]).unwrap();
    let set = compute_a_iota(&sys).unwrap();
    let fields = build_field_set(&sys, &set.flags, true).unwrap();
    let map = build_projection(3).unwrap();
    let region = rasterize_region(&fields, &map, 16, TOL, 20).unwrap();
    assert_eq!(region.count(Membership::Interior), 0);
    assert!(region.candidates.is_empty());
    assert!(region.candidate_note.is_some());
}

fn classify_lambda(fields: &orbitflag::FlagFieldSet, lambda: &[f64]) -> Membership {
    let map = build_projection(lambda.len()).unwrap();
    let x = map.apply(&RVector::from_column_slice(lambda));
    slc_membership(fields, &x, TOL).class
}

#[test]
fn four_jump_vertices_are_exterior_edges_are_not() {
    let sys = four_jumps();
    let set = compute_a_iota(&sys).unwrap();
    assert!((orbitflag::linalg::fro(&(&set.a_iota - diag_real(&[2.0, 2.0, -1.0, -3.0])))) < 1e-14);
    let fields = build_field_set(&sys, &set.flags, true).unwrap();
    for k in 0..4 {
        let mut v = vec![0.0; 4];
        v[k] = 1.0;
        assert_eq!(classify_lambda(&fields, &v), Membership::Exterior, "vertex {k}");
    }
    let hits = (1..40)
        .map(|i| i as f64 / 40.0)
        .filter(|&a| classify_lambda(&fields, &[a, 1.0 - a, 0.0, 0.0]) != Membership::Exterior)
        .count();
    assert!(hits > 0);
}

#[test]
fn eight_jump_vertices_are_not_exterior() {
    let sys = eight_jumps();
    let set = compute_a_iota(&sys).unwrap();
    let fields = build_field_set(&sys, &set.flags, true).unwrap();
    for k in 0..4 {
        let mut v = vec![0.0; 4];
        v[k] = 1.0;
        assert_ne!(classify_lambda(&fields, &v), Membership::Exterior, "vertex {k}");
    }
}

#[test]
fn relabeling_permutes_the_grid() {
    let sys = jump_system(3, &[(1, 2, 5.0), (2, 3, 2.0), (3, 1, 1.0), (1, 3, 0.5)]);
    let swapped = sys.relabeled(&[1, 0, 2]).unwrap();
    let map = build_projection(3).unwrap();
    let classes = |s: &LindbladSystem| {
        let set = compute_a_iota(s).unwrap();
        let fields = build_field_set(s, &set.flags, true).unwrap();
        rasterize_region(&fields, &map, 24, TOL, 20).unwrap()
    };
    let a = classes(&sys);
    let b = classes(&swapped);
    assert!(a.count(Membership::Interior) > 0);
    assert!(a.count(Membership::Exterior) > 0);
    for g in &a.grid {
        let l = &g.lattice;
        let image = vec![l[1], l[0], l[2]];
        let h = b.grid.iter().find(|p| p.lattice == image).unwrap();
        assert_eq!(g.class, h.class, "at {:?}", l);
    }
}
