use morphquad::allocation::{
    allocate_wrench, extract_arm_commands, minimum_norm_oracle, saturate_thrust_set, yaw_basis,
};
use morphquad::so3::{
    euler_zxy_to_rotation, exp_so3, hat, log_so3, orthonormality_defect, psi_error, rotation_to_euler_zxy, vee,
    EulerZxy, Vec3,
};
use morphquad::vehicle::{forward_wrench, VehicleParams, Wrench};
use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI};

fn vec3(bound: f64) -> impl Strategy<Value = Vec3> {
    (-bound..bound, -bound..bound, -bound..bound).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn vehicle() -> impl Strategy<Value = VehicleParams> {
    (0.1..0.6f64, 0.1..0.6f64, -0.1..0.1f64).prop_map(|(lx, ly, lz)| VehicleParams {
        arm_half_length: lx,
        arm_half_breadth: ly,
        arm_height: lz,
        ..VehicleParams::default()
    })
}

proptest! {
    #[test]
    fn hat_vee_roundtrip(v in vec3(10.0)) {
        prop_assert_eq!(vee(&hat(&v)).unwrap(), v);
        prop_assert!((hat(&v) + hat(&v).transpose()).amax() == 0.0);
    }

    #[test]
    fn exp_is_a_rotation_and_log_inverts(v in vec3(3.0)) {
        prop_assume!(v.norm() < PI - 1e-6);
        let r = exp_so3(&v);
        prop_assert!(orthonormality_defect(r.matrix()) < 1e-14);
        prop_assert!((r.matrix().determinant() - 1.0).abs() < 1e-14);
        prop_assert!((log_so3(&r) - v).norm() < 1e-9 * (1.0 + v.norm()));
    }

    #[test]
    fn psi_range_and_symmetry(a in vec3(3.0), b in vec3(3.0)) {
        let (ra, rb) = (exp_so3(&a), exp_so3(&b));
        let psi = psi_error(&ra, &rb);
        prop_assert!((0.0..=2.0 + 1e-12).contains(&psi));
        prop_assert!((psi - psi_error(&rb, &ra)).abs() < 1e-12);
        let half_trace = 0.5 * (3.0 - (rb.matrix().transpose() * ra.matrix()).trace());
        prop_assert!((psi - half_trace).abs() < 1e-12);
    }

    #[test]
    fn euler_zxy_roundtrip(yaw in -3.1..3.1f64, roll in -1.5..1.5f64, pitch in -3.1..3.1f64) {
        let e = EulerZxy::new(yaw, roll, pitch);
        let (back, singular) = rotation_to_euler_zxy(&euler_zxy_to_rotation(&e));
        prop_assert!(!singular);
        prop_assert!((back.yaw - yaw).abs() < 1e-9);
        prop_assert!((back.roll - roll).abs() < 1e-9);
        prop_assert!((back.pitch - pitch).abs() < 1e-9);
    }

    #[test]
    fn allocation_matches_oracle_for_any_layout(p in vehicle(), f in vec3(60.0), t in vec3(10.0)) {
        let w = Wrench::new(f, t);
        let a = allocate_wrench(&w, &p);
        prop_assert!((a.wrench(&p) - w).norm() <= 1e-9 * (1.0 + w.norm()));
        let o = minimum_norm_oracle(&w, &p).unwrap();
        prop_assert!(a.distance(&o) <= 1e-9 * (1.0 + w.norm()));
    }

    #[test]
    fn allocation_is_linear(f1 in vec3(30.0), t1 in vec3(5.0), f2 in vec3(30.0), t2 in vec3(5.0), k in -3.0..3.0f64) {
        let p = VehicleParams::default();
        let (w1, w2) = (Wrench::new(f1, t1), Wrench::new(f2, t2));
        let lhs = allocate_wrench(&(w1 + w2 * k), &p);
        let (a, b) = (allocate_wrench(&w1, &p), allocate_wrench(&w2, &p));
        for i in 0..4 {
            prop_assert!((lhs.0[i] - (a.0[i] + b.0[i] * k)).norm() < 1e-10 * (1.0 + lhs.0[i].norm()));
        }
    }

    #[test]
    fn extraction_roundtrip(p in vehicle(), f in vec3(60.0), t in vec3(10.0)) {
        let w = Wrench::new(f, t);
        prop_assume!(w.norm() > 1e-6);
        let cmds = extract_arm_commands(&allocate_wrench(&w, &p), &p).unwrap();
        for c in cmds {
            prop_assert!(c.alpha.abs() <= PI && c.beta.abs() <= FRAC_PI_2 && c.omega >= 0.0);
        }
        prop_assert!((forward_wrench(&cmds, &p) - w).norm() <= 1e-9 * w.norm());
    }

    #[test]
    fn saturation_preserves_direction(f in vec3(200.0), t in vec3(40.0)) {
        let p = VehicleParams::default();
        let raw = allocate_wrench(&Wrench::new(f, t), &p);
        let (sat, rep) = saturate_thrust_set(&raw, &p);
        prop_assert!(sat.max_norm() <= p.max_thrust * (1.0 + 1e-12));
        prop_assert!(rep.scale > 0.0 && rep.scale <= 1.0);
        for (a, b) in raw.0.iter().zip(sat.0.iter()) {
            prop_assert!((a * rep.scale - b).norm() <= 1e-12 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn yaw_basis_is_torque_only(p in vehicle()) {
        let basis = yaw_basis(&p);
        let sum: Vec3 = basis.iter().sum();
        prop_assert!(sum.norm() < 1e-12);
        for b in basis {
            prop_assert!((b.norm() - 1.0).abs() < 1e-12 && b.z == 0.0);
        }
    }
}
