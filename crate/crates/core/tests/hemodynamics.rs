use std::f64::consts::PI;

use hemoflow::flowfields::{
    parabolic_profile, poiseuille_power_law, power_law_mean_velocity, power_law_wall_shear_rate, VelocityField,
};
use hemoflow::hemodynamics::*;
use hemoflow::mesh::*;
use hemoflow::mri::{phase_to_velocity, reconstruct, synthesize_signal, SequenceParams, ALL_ENCODES};
use hemoflow::rheology::CFD_CURVES;
use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RADIUS: f64 = 0.01;
const LENGTH: f64 = 0.1;

fn wall_mean_wss(level: u32, model: &ViscosityModel, pressure_drop: f64) -> f64 {
    let mesh = generate_pipe_mesh(RADIUS, LENGTH, level).unwrap();
    let pl = match *model {
        ViscosityModel::Newtonian { mu } => hemoflow::rheology::PowerLawParams::new(mu, 1.0, 0.0),
        ViscosityModel::PowerLaw { m, n, .. } => hemoflow::rheology::PowerLawParams::new(m, n, 0.0),
    };
    let field = poiseuille_power_law(&mesh, pressure_drop, &pl).unwrap();
    let r = estimate(&mesh, &field, model, &EstimateOptions::default()).unwrap();
    r.wss_mag[0].iter().sum::<f64>() / r.wss_mag[0].len() as f64
}

#[test]
fn pipe_force_balance_converges() {
    let hct70 = ViscosityModel::power_law(&CFD_CURVES[4].params());
    let dp = 5.0;
    let exact = dp * RADIUS / (2.0 * LENGTH);
    let e1 = (wall_mean_wss(1, &hct70, dp) - exact).abs() / exact;
    let e2 = (wall_mean_wss(2, &hct70, dp) - exact).abs() / exact;
    assert!(e1 < 0.05, "default level error {e1}");
    assert!(e2 < e1);
    assert!((e1 / e2).log2() >= 1.0, "order {}", (e1 / e2).log2());
}

#[test]
fn newtonian_dissipation_equals_pumping_power() {
    let mu = 3.5e-3;
    let dp = 5.0;
    let mesh = generate_pipe_mesh(RADIUS, LENGTH, 1).unwrap();
    let field = poiseuille_power_law(&mesh, dp, &hemoflow::rheology::PowerLawParams::new(mu, 1.0, 0.0)).unwrap();
    let r = estimate(
        &mesh,
        &field,
        &ViscosityModel::Newtonian { mu },
        &EstimateOptions::default(),
    )
    .unwrap();
    let total: f64 = r.el_rate[0].iter().sum::<f64>() * 1e-6;
    let q = RADIUS.powi(4) * PI * dp / (8.0 * mu * LENGTH);
    assert!((total - q * dp).abs() / (q * dp) < 0.10, "{total} vs {}", q * dp);
    assert!(r.el_rate[0].iter().all(|e| *e >= 0.0));
}

#[test]
fn power_law_wall_shear_rate_on_refined_mesh() {
    let pl = CFD_CURVES[2].params();
    let dp = 5.0;
    let mesh = generate_pipe_mesh(RADIUS, LENGTH, 2).unwrap();
    let field = poiseuille_power_law(&mesh, dp, &pl).unwrap();
    let g = recover_gradients(&mesh, &field.frames[0]).unwrap();
    let wall = mesh.wall_vertices();
    let mean: f64 = wall.iter().map(|&v| shear_rate(&g[v])).sum::<f64>() / wall.len() as f64;
    let u_mean = power_law_mean_velocity(RADIUS, dp / LENGTH, pl.m, pl.n);
    let analytic = (3.0 * pl.n + 1.0) / (4.0 * pl.n) * 8.0 * u_mean / (2.0 * RADIUS);
    assert!((analytic - power_law_wall_shear_rate(RADIUS, dp / LENGTH, pl.m, pl.n)).abs() < 1e-9 * analytic);
    assert!((mean - analytic).abs() / analytic < 0.05, "{mean} vs {analytic}");
}

#[test]
fn random_linear_fields_are_reproduced() {
    let mesh = generate_pipe_mesh(RADIUS, 0.03, 0).unwrap();
    let wall: std::collections::HashSet<usize> = mesh.boundary.iter().flat_map(|b| b.vertices).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let a = Matrix3::from_fn(|_, _| rng.random_range(-10.0..10.0));
        let b = Point::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let u: Vec<Point> = mesh.vertices.iter().map(|x| a * x + b).collect();
        let g = recover_gradients(&mesh, &u).unwrap();
        for v in (0..mesh.num_vertices()).filter(|v| !wall.contains(v)) {
            assert!((g[v] - a).amax() < 1e-9);
        }
    }
}

#[test]
fn low_shear_model_ratio_is_closed_form() {
    let pl = CFD_CURVES[4].params();
    let power_law = ViscosityModel::power_law(&pl);
    let newtonian = ViscosityModel::Newtonian { mu: 3.5e-3 };
    // pressure drop giving a wall shear rate of 10 1/s
    let g_wall: f64 = 10.0;
    let dp = 2.0 * pl.m * g_wall.powf(pl.n) / RADIUS * LENGTH;
    let mesh = generate_pipe_mesh(RADIUS, LENGTH, 1).unwrap();
    let field = poiseuille_power_law(&mesh, dp, &pl).unwrap();
    let geom = MeshGeometry::new(&mesh).unwrap();
    let grads = recover_gradient_field(&mesh, &field).unwrap();
    let opts = EstimateOptions::default();
    let a = estimate_from_gradients(&geom, &grads, &field, &power_law, &opts).unwrap();
    let b = estimate_from_gradients(&geom, &grads, &field, &newtonian, &opts).unwrap();
    for (i, &v) in a.wall_vertices.iter().enumerate() {
        let ratio = pl.m * shear_rate(&grads.frames[0][v]).max(0.1).powf(pl.n - 1.0) / 3.5e-3;
        let got = a.wss_mag[0][i] / b.wss_mag[0][i];
        assert!((got - ratio).abs() / ratio < 1e-6);
        assert!(ratio > 1.0);
    }
    for v in 0..mesh.num_vertices() {
        if b.el_rate[0][v] > 0.0 {
            let ratio = a.mu_apparent[0][v] / 3.5e-3;
            assert!((a.el_rate[0][v] / b.el_rate[0][v] - ratio).abs() / ratio < 1e-6);
        }
    }
}

fn bands(mesh: &TetMesh) -> SegmentLabels {
    let cuts: Vec<CutPlane> = [0.25, 0.5, 0.75]
        .iter()
        .map(|f| CutPlane {
            point: [0.0, 0.0, f * LENGTH],
            normal: [0.0, 0.0, 1.0],
            radius: None,
        })
        .collect();
    segment_labels(mesh, &cuts, &[]).unwrap()
}

#[test]
fn straight_pipe_bands_agree() {
    let pl = CFD_CURVES[1].params();
    let mesh = generate_pipe_mesh(RADIUS, LENGTH, 1).unwrap();
    let field = poiseuille_power_law(&mesh, 5.0, &pl).unwrap();
    let r = estimate(
        &mesh,
        &field,
        &ViscosityModel::power_law(&pl),
        &EstimateOptions::default(),
    )
    .unwrap();
    let stats = segment_stats(&r, &bands(&mesh)).unwrap();
    let means: Vec<f64> = SEGMENTS
        .iter()
        .map(|s| stats.get(s.name(), Some(0), Param::Wss).unwrap().mean.unwrap())
        .collect();
    let all = stats.get(ALL_SEGMENTS, Some(0), Param::Wss).unwrap().mean.unwrap();
    for m in &means {
        assert!((m - all).abs() / all < 0.02, "{means:?}");
    }
}

#[test]
fn compare_reports_closed_form_difference() {
    let pl = CFD_CURVES[4].params();
    let mesh = generate_pipe_mesh(RADIUS, LENGTH, 1).unwrap();
    // uniform γ̇ = 10: linear shear profile u_z = 10 x
    let field = VelocityField::steady(mesh.vertices.iter().map(|p| Point::z() * (10.0 * p.x)).collect(), 1.0).unwrap();
    let labels = bands(&mesh);
    let opts = EstimateOptions::default();
    let a = estimate(&mesh, &field, &ViscosityModel::power_law(&pl), &opts).unwrap();
    let b = estimate(&mesh, &field, &ViscosityModel::Newtonian { mu: 3.5e-3 }, &opts).unwrap();
    let cmp = compare_models(
        &segment_stats(&a, &labels).unwrap(),
        &segment_stats(&b, &labels).unwrap(),
    )
    .unwrap();
    let expected = (3.5e-3 / (pl.m * 10f64.powf(pl.n - 1.0)) - 1.0) * 100.0;
    for row in cmp.rows.iter().filter(|r| r.param != Param::Osi) {
        let got = row.rel_diff_percent.unwrap();
        assert!((got - expected).abs() < 1e-6 * expected.abs(), "{row:?}");
        assert!(got < 0.0);
    }
}

#[test]
fn voxel_velocities_interpolate_onto_the_mesh() {
    let (radius, length, peak) = (0.008, 0.04, 1.0);
    let mesh = generate_pipe_mesh(radius, length, 0).unwrap();
    let profile = parabolic_profile(&mesh).unwrap();
    let truth: Vec<Point> = profile.iter().map(|s| Point::z() * (peak * s)).collect();
    let field = VelocityField::steady(truth.clone(), 1.0).unwrap();
    let params = SequenceParams {
        venc: 1.5,
        matrix: [28, 16, 28],
        fov_center: [-0.001, -0.001, 0.021],
        cardiac_phases: 1,
        ..Default::default()
    };
    let m0 = vec![1.0; mesh.num_vertices()];
    let k = synthesize_signal(&mesh, &m0, &field, &params, &ALL_ENCODES, 0).unwrap();
    let vox = phase_to_velocity(&reconstruct(&k).unwrap(), params.venc).unwrap();
    let back = interpolate_to_mesh(&[vox], &mesh, 1.0).unwrap();
    let mut checked = 0;
    for (i, p) in mesh.vertices.iter().enumerate() {
        // one and a half voxels clear of the wall and the caps
        if p.x.hypot(p.y) > radius - 0.003 || p.z < 0.006 || p.z > length - 0.006 {
            continue;
        }
        assert!(
            (back.frames[0][i] - truth[i]).norm() < 0.05 * params.venc,
            "vertex {i} at {p:?}"
        );
        checked += 1;
    }
    assert!(checked > 50);
}
