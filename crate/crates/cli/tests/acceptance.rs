//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Runs without the libtest harness so the lines always show.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use flexeig::eig::symmetric_eigen;
use flexeig::fem::beam::{global_element_stiffness, Section};
use flexeig::fem::*;
use flexeig::metrics::{modal_response, out_of_plane_share};
use flexeig::*;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn gaussian_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

fn gaussian_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> StiffnessMatrix {
    let b = gaussian_matrix(rng, n, n);
    StiffnessMatrix::new(&b * b.transpose() + DMatrix::identity(n, n) * n as f64).unwrap()
}

fn random_metric(rng: &mut ChaCha8Rng, n: usize) -> DofMetric {
    DofMetric::from_weights((0..n).map(|_| rng.random_range(0.5..20.0)).collect()).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t < limit, || {
        format!("took {:.2} s, limit {:.0} s", t.as_secs_f64(), limit.as_secs_f64())
    })
}

/// Rayleigh quotient computed directly, independent of the library.
fn rq(k: &StiffnessMatrix, w: &DofMetric, u: &DVector<f64>) -> f64 {
    let ku = k.as_matrix() * u;
    u.dot(&ku) / u.iter().zip(w.diag().iter()).map(|(x, d)| d * x * x).sum::<f64>()
}

fn courant_fischer() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut problems: Vec<(StiffnessMatrix, DofMetric)> = (0..50)
        .map(|_| {
            let k = random_spd(&mut rng, 20);
            let w = random_metric(&mut rng, 20);
            (k, w)
        })
        .collect();
    let hinge = Analysis::new(mesh_notch_hinge(&NotchHingeParams::default()).unwrap()).unwrap();
    problems.push((hinge.stiffness().clone(), hinge.metric().clone()));

    let mut worst = f64::INFINITY;
    for (i, (k, w)) in problems.iter().enumerate() {
        let basis = eig_sym(k, w).map_err(|e| e.to_string())?;
        let l1 = basis.eigenvalue(0);
        for _ in 0..1000 {
            let u = gaussian_vector(&mut rng, k.n());
            let u = &u / w.norm(&u);
            let r = rq(k, w, &u);
            worst = worst.min((r - l1) / l1);
            ensure(r >= l1 - 1e-10 * l1, || format!("problem {i}: R(u) = {r} < λ1 = {l1}"))?;
        }
        let cert = min_rayleigh_certificate(k, w, &basis, 1000, i as u64).map_err(|e| e.to_string())?;
        ensure(cert.holds, || {
            format!("problem {i}: certificate reports {} violations", cert.violations)
        })?;
    }
    within(Duration::from_secs(5), start)?;
    Ok(format!("51 problems x 1000 samples, min (R - λ1)/λ1 = {worst:.3e}"))
}

fn modal_decoupling() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let models = [
        ("notch hinge", mesh_notch_hinge(&NotchHingeParams::default()).unwrap()),
        ("parallel guide", mesh_parallel_guide(&GuideParams::default()).unwrap()),
    ];
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (name, model) in models {
        let mut spaces = vec![Analysis::new(model.clone()).unwrap()];
        // the unreduced notch mesh has a stiffness ratio beyond the singularity threshold
        if name == "parallel guide" {
            spaces.push(Analysis::full_space(model).unwrap());
        }
        for an in spaces {
            let basis = eig_sym(an.stiffness(), an.metric()).map_err(|e| e.to_string())?;
            let chol = an
                .stiffness()
                .as_matrix()
                .clone()
                .cholesky()
                .ok_or("stiffness not PD")?;
            for _ in 0..20 {
                let f = gaussian_vector(&mut rng, an.n());
                let direct = chol.solve(&f);
                let modal = modal_response(&basis, &f).map_err(|e| e.to_string())?;
                let err = an.metric().norm(&(&modal - &direct)) / an.metric().norm(&direct);
                worst = worst.max(err);
                ensure(err <= 1e-8, || {
                    format!("{name} ({} DOF): relative error {err:.3e}", an.n())
                })?;
                count += 1;
            }
        }
    }
    within(Duration::from_secs(5), start)?;
    Ok(format!("{count} loads, worst relative W-norm error {worst:.3e}"))
}

fn eigensolver_recovery() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst_val, mut worst_res): (f64, f64) = (0.0, 0.0);
    for case in 0..100 {
        let n = rng.random_range(1..=50);
        let q = gaussian_matrix(&mut rng, n, n).qr().q();
        let mut vals: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.random_range(0.0..3.0))).collect();
        let d = DMatrix::from_diagonal(&DVector::from_vec(vals.clone()));
        let a = &q * d * q.transpose();
        let a = (&a + a.transpose()) * 0.5;
        vals.sort_by(f64::total_cmp);
        let (got, vecs) = symmetric_eigen(&a).map_err(|e| e.to_string())?;
        let norm = a.norm();
        for i in 0..n {
            let e = ((got[i] - vals[i]) / vals[i]).abs();
            worst_val = worst_val.max(e);
            ensure(e <= 1e-10, || {
                format!("case {case} (n = {n}): eigenvalue {i} error {e:.3e}")
            })?;
            let v = vecs.column(i);
            let res = (&a * v - v * got[i]).norm() / norm;
            worst_res = worst_res.max(res);
            ensure(res <= 1e-10, || format!("case {case} (n = {n}): residual {res:.3e}"))?;
        }
    }
    Ok(format!(
        "100 instances, worst eigenvalue error {worst_val:.3e}, worst residual {worst_res:.3e}"
    ))
}

/// Smallest singular value of `Φ_eᵀ W Φ_r` by nalgebra's SVD.
fn svd_oracle(phi_e: &DMatrix<f64>, phi_r: &DMatrix<f64>, w: &DofMetric) -> f64 {
    let wd = DMatrix::from_diagonal(w.diag());
    let m = phi_e.transpose() * wd * phi_r;
    m.singular_values().iter().copied().fold(f64::INFINITY, f64::min)
}

fn random_orthogonal(rng: &mut ChaCha8Rng, p: usize) -> DMatrix<f64> {
    gaussian_matrix(rng, p, p).qr().q()
}

fn extended_similarity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 8;
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let p = 2 + case % 2;
        let k = random_spd(&mut rng, n);
        let w = random_metric(&mut rng, n);
        let basis = eig_sym(&k, &w).map_err(|e| e.to_string())?;
        let phi_e = basis.leading(p);
        let raw: Vec<DVector<f64>> = (0..p).map(|_| gaussian_vector(&mut rng, n)).collect();
        let r = ReferenceKinematics::from_vectors(&raw, &w, "random").map_err(|e| e.to_string())?;
        let de = extended_accuracy_index(&phi_e, r.vectors(), &w).map_err(|e| e.to_string())?;
        let oracle = svd_oracle(&phi_e, r.vectors(), &w);
        worst = worst.max((de - oracle).abs());
        ensure((de - oracle).abs() <= 1e-10, || {
            format!("case {case}: δe = {de}, oracle {oracle}")
        })?;

        let rot_r = r.vectors() * random_orthogonal(&mut rng, p);
        let rot_e = &phi_e * random_orthogonal(&mut rng, p);
        let de_rot = extended_accuracy_index(&rot_e, &rot_r, &w).map_err(|e| e.to_string())?;
        ensure((de_rot - de).abs() <= 1e-10, || {
            format!("case {case}: rotated bases give {de_rot} vs {de}")
        })?;

        let phi1 = basis.eigenvector(0);
        let v = &raw[0];
        let scalar = accuracy_index(&phi1, v, &w).map_err(|e| e.to_string())?;
        let one = ReferenceKinematics::from_vectors(std::slice::from_ref(v), &w, "one").map_err(|e| e.to_string())?;
        let ext = extended_accuracy_index(&basis.leading(1), one.vectors(), &w).map_err(|e| e.to_string())?;
        let direct = accuracy_index(&phi1, &one.vector(0), &w).map_err(|e| e.to_string())?;
        ensure(ext.to_bits() == direct.to_bits(), || {
            format!("case {case}: p = 1 gives {ext} vs δ = {direct}")
        })?;
        ensure((scalar - direct).abs() <= 1e-12, || {
            format!("case {case}: δ depends on scaling")
        })?;
    }
    Ok(format!(
        "100 instances (p = 2, 3), worst |δe - σmin| = {worst:.3e}; p = 1 bitwise equal to δ"
    ))
}

fn fem_validity() -> Check {
    let (p, len, n) = (2.0, 50.0, 20);
    let nodes = (0..=n)
        .map(|i| Node::new(i as u32 + 1, len * i as f64 / n as f64, 0.0))
        .collect();
    let elements = (0..n)
        .map(|i| Element {
            n1: NodeId(i as u32 + 1),
            n2: NodeId(i as u32 + 2),
            b: 10.0,
            h: 1.0,
        })
        .collect();
    let model = Model {
        nodes,
        elements,
        material: Material::default(),
        clamped_nodes: vec![NodeId(1)],
        rigid_links: vec![],
        moving_nodes: vec![],
        characteristic_length: len,
    };
    let an = Analysis::new(model).map_err(|e| e.to_string())?;
    let tip = NodeId(n as u32 + 1);
    let f = an
        .load_vector(&[(tip, [0.0, -p, 0.0, 0.0, 0.0, 0.0])])
        .map_err(|e| e.to_string())?;
    let u = an
        .stiffness()
        .as_matrix()
        .clone()
        .cholesky()
        .ok_or("cantilever not PD")?
        .solve(&f);
    let v = an.nodal(&u, tip).map_err(|e| e.to_string())?[1];
    let exact = -p * len.powi(3) / (3.0 * 200_000.0 * 10.0 / 12.0);
    let tip_err = ((v - exact) / exact).abs();
    ensure(tip_err < 0.005, || format!("tip deflection {v} vs {exact}"))?;

    let ke = global_element_stiffness(
        Section::new(10.0, 0.5).unwrap(),
        &Material::default(),
        [0.0, 0.0, 0.0],
        [3.0, 1.0, 0.0],
    )
    .map_err(|e| e.to_string())?;
    let (vals, _) = symmetric_eigen(&DMatrix::from_column_slice(12, 12, ke.as_slice())).map_err(|e| e.to_string())?;
    let max = vals[11];
    let zeros = vals.iter().filter(|l| l.abs() <= 1e-10 * max).count();
    ensure(zeros == 6, || format!("{zeros} zero eigenvalues: {vals:?}"))?;

    let lambda1 = |n_notch| -> Result<f64, String> {
        let an = Analysis::new(
            mesh_notch_hinge(&NotchHingeParams {
                n_notch,
                ..Default::default()
            })
            .unwrap(),
        )
        .map_err(|e| e.to_string())?;
        Ok(eig_sym(an.stiffness(), an.metric())
            .map_err(|e| e.to_string())?
            .eigenvalue(0))
    };
    let (a, b) = (lambda1(40)?, lambda1(80)?);
    let change = ((a - b) / b).abs();
    ensure(change < 0.01, || format!("λ1 changes by {change:.3e} on mesh doubling"))?;
    Ok(format!(
        "tip error {tip_err:.2e}, {zeros} rigid-body modes, mesh-doubling change {change:.2e}"
    ))
}

fn sweep_trend() -> Check {
    let start = Instant::now();
    let rows = sweep_thickness(&NotchHingeParams::default(), &[0.2, 0.4, 0.6, 0.8, 1.0]);
    let s = rows
        .iter()
        .map(|r| r.result.as_ref().map(|v| v.selectivity).map_err(|e| e.to_string()))
        .collect::<Result<Vec<f64>, String>>()?;
    within(Duration::from_secs(10), start)?;
    ensure(s.windows(2).all(|w| w[1] < w[0]), || {
        format!("S not strictly decreasing: {s:?}")
    })?;
    Ok(format!(
        "S = {}",
        s.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(", ")
    ))
}

fn mode_characterization() -> Check {
    let an = Analysis::new(mesh_notch_hinge(&NotchHingeParams::default()).unwrap()).map_err(|e| e.to_string())?;
    let basis = eig_sym(an.stiffness(), an.metric()).map_err(|e| e.to_string())?;
    let phi1 = basis.eigenvector(0);
    let oop1 = out_of_plane_share(&phi1, an.dof_map(), an.metric()).map_err(|e| e.to_string())?;
    ensure(oop1 < 0.05, || format!("mode 1 out-of-plane share {oop1}"))?;
    let fit = fit_rigid_motion(&phi1, &an.model().moving_nodes, &an).map_err(|e| e.to_string())?;
    let c = fit.center.ok_or("mode 1 has no rotation")?;
    ensure(c[0].abs() < 5.0 && c[1].abs() < 5.0, || {
        format!("mode 1 rotates about {c:?}, outside the notch")
    })?;
    let oop2 = out_of_plane_share(&basis.eigenvector(1), an.dof_map(), an.metric()).map_err(|e| e.to_string())?;
    ensure(oop2 > 0.9, || format!("mode 2 out-of-plane share {oop2}"))?;
    Ok(format!(
        "mode 1: rotation about ({:.3}, {:.3}), out-of-plane {oop1:.1e}; mode 2 out-of-plane {oop2:.4}",
        c[0], c[1]
    ))
}

fn accuracy_contract() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let k = random_spd(&mut rng, 12);
    let w = random_metric(&mut rng, 12);
    let basis = eig_sym(&k, &w).map_err(|e| e.to_string())?;
    let phi1 = basis.eigenvector(0);
    let same = accuracy_index(&phi1, &phi1, &w).map_err(|e| e.to_string())?;
    ensure(same == 1.0, || format!("δ(φ1, φ1) = {same}"))?;
    let orth = accuracy_index(&phi1, &basis.eigenvector(5), &w).map_err(|e| e.to_string())?;
    ensure(orth.abs() <= 1e-12, || {
        format!("δ for a W-orthogonal reference = {orth}")
    })?;
    for i in 0..1000 {
        let n = rng.random_range(1..=15);
        let w = random_metric(&mut rng, n);
        let (a, b) = (gaussian_vector(&mut rng, n), gaussian_vector(&mut rng, n));
        let d = accuracy_index(&a, &b, &w).map_err(|e| e.to_string())?;
        ensure((0.0..=1.0).contains(&d), || format!("pair {i}: δ = {d}"))?;
    }
    Ok(format!(
        "δ(φ1, φ1) = {same}, δ(φ1, φ6) = {orth:.1e}, 1000 random pairs in [0, 1]"
    ))
}

struct Run {
    stdout: Vec<u8>,
    code: Option<i32>,
    files: Vec<(String, Vec<u8>)>,
}

fn run_cli(dir: &Path, args: &[&str], outputs: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_flexeig"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("running flexeig");
    Run {
        stdout: out.stdout,
        code: out.status.code(),
        files: outputs
            .iter()
            .map(|f| (f.to_string(), std::fs::read(dir.join(f)).unwrap_or_default()))
            .collect(),
    }
}

fn determinism() -> Check {
    let inputs = [
        (
            "hinge.json",
            "{\"schema_version\": 1, \"generator\": \"notch_hinge\"}\n",
        ),
        (
            "guide.json",
            "{\"schema_version\": 1, \"generator\": \"parallel_guide\"}\n",
        ),
    ];
    let commands: Vec<(Vec<&str>, Vec<&str>)> = vec![
        (
            vec![
                "analyze",
                "hinge.json",
                "--reference",
                "rotation:0,0,0:0,0,1",
                "--load",
                "47:0,1,0,0,0,0",
                "--out",
                "a.json",
            ],
            vec!["a.json"],
        ),
        (
            vec![
                "sweep",
                "hinge.json",
                "--param",
                "l",
                "--values",
                "0.2,0.4,0.6,0.8,1.0",
                "--out",
                "s.csv",
            ],
            vec!["s.csv"],
        ),
        (
            vec![
                "sweep",
                "hinge.json",
                "--param",
                "l",
                "--values",
                "0.3,0.5",
                "--out",
                "s.json",
            ],
            vec!["s.json"],
        ),
        (
            vec!["modes", "guide.json", "--count", "4", "--out", "m.json"],
            vec!["m.json"],
        ),
        (
            vec![
                "certify",
                "hinge.json",
                "--samples",
                "500",
                "--seed",
                "11",
                "--out",
                "c.json",
            ],
            vec!["c.json"],
        ),
        (
            vec![
                "export",
                "guide.json",
                "--model-out",
                "g.json",
                "--matrix",
                "g.mtx",
                "--dofmap",
                "g.dof.json",
                "--reference",
                "translation:1,0,0",
                "--reference-out",
                "g.ref.json",
            ],
            vec!["g.json", "g.mtx", "g.dof.json", "g.ref.json"],
        ),
        (
            vec![
                "import",
                "--matrix",
                "g.mtx",
                "--dofmap",
                "g.dof.json",
                "--lc",
                "40",
                "--reference-file",
                "g.ref.json",
                "--out",
                "i.json",
            ],
            vec!["i.json"],
        ),
    ];
    let dirs = [
        tempfile::tempdir().map_err(|e| e.to_string())?,
        tempfile::tempdir().map_err(|e| e.to_string())?,
    ];
    let mut runs: Vec<Vec<Run>> = Vec::new();
    for dir in &dirs {
        for (name, text) in inputs {
            std::fs::write(dir.path().join(name), text).map_err(|e| e.to_string())?;
        }
        runs.push(
            commands
                .iter()
                .map(|(args, outs)| run_cli(dir.path(), args, outs))
                .collect(),
        );
    }
    for (i, (a, b)) in runs[0].iter().zip(&runs[1]).enumerate() {
        let name = commands[i].0[0];
        ensure(a.code == Some(0), || format!("{name} exited with {:?}", a.code))?;
        ensure(a.stdout == b.stdout, || format!("{name}: standard output differs"))?;
        for ((fa, da), (_, db)) in a.files.iter().zip(&b.files) {
            ensure(!da.is_empty(), || format!("{name}: {fa} missing"))?;
            ensure(da == db, || format!("{name}: {fa} differs"))?;
        }
    }
    Ok(format!(
        "{} subcommand runs byte-identical across two runs",
        commands.len()
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("Courant-Fischer lower bound", courant_fischer),
        ("modal decoupling", modal_decoupling),
        ("eigensolver construct-then-recover", eigensolver_recovery),
        ("extended cosine similarity", extended_similarity),
        ("FEM validity", fem_validity),
        ("selectivity decreases with web thickness", sweep_trend),
        ("notch hinge mode characterization", mode_characterization),
        ("accuracy index contract", accuracy_contract),
        ("CLI determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail} [{secs:.2} s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {detail} [{secs:.2} s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
