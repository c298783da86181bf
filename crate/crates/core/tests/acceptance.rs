//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::process::ExitCode;
use std::thread;
use std::time::Instant;

use flowtopo::experiments::*;
use flowtopo::model_synth::Shape;
use flowtopo::patch_pipeline::{dct_flow_basis, grid_laplacian};

type Outcome = (bool, String);

fn witness(shape: Shape) -> Outcome {
    let basis = dct_flow_basis(&grid_laplacian());
    let params = WitnessParams { witnesses: 10_000, landmarks: 150, ..WitnessParams::default() };
    let r = witness_signature(shape, &params, &basis).expect("witness run");
    let sigs: Vec<String> = r
        .signatures
        .iter()
        .map(|s| format!("Z/{} {:?} (want {:?})", s.prime, s.counts, s.expected))
        .collect();
    let ok = r.passed && r.signatures.iter().map(|s| s.prime).eq([2, 3]);
    (ok, sigs.join(", "))
}

fn circle() -> Outcome {
    let basis = dct_flow_basis(&grid_laplacian());
    let r = circle_calibration(&CircleParams::default(), &basis).expect("circle run");
    let ok = r.params.points == 21 && r.params.noise_sigma == 0.1 && r.width >= 0.5;
    (ok, format!("(1,1) window {:?}, width {:.3}", r.window, r.width))
}

fn horizontal() -> Outcome {
    let d = grid_laplacian();
    let basis = dct_flow_basis(&d);
    let r = horizontal_circle(&HorizontalParams::default(), &d, &basis).expect("horizontal run");
    let ok = r.max_radius_error <= 0.05 && r.signature.get(1) == Some(&1) && r.bin.k_used <= 300;
    (
        ok,
        format!(
            "core {} pts, k {}, max |c1²+c2²−1| = {:.4}, signature {:?}",
            r.bin.core_size, r.bin.k_used, r.max_radius_error, r.signature
        ),
    )
}

fn torus_bin_checks() -> (Outcome, Outcome) {
    let d = grid_laplacian();
    let basis = dct_flow_basis(&d);
    let params = TorusBinParams::default();
    let out = torus_bins(&params, &d, &basis).expect("torus pipeline");
    let fibers = fiber_check(&params, &out).expect("fiber check");
    let failing: Vec<String> = fibers
        .bins
        .iter()
        .filter(|b| !b.passed)
        .map(|b| format!("θ={:.3} {:?}", b.bin.theta, b.signature))
        .collect();
    let fiber_ok = fibers.bins.len() == 12 && fibers.passing_bins == 12;
    let fiber_msg = format!("{}/{} bins with one long loop {:?}", fibers.passing_bins, fibers.bins.len(), failing);

    let z = angle_zigzag(&params, &out).expect("zigzag");
    let nodes = z.barcode.node_count();
    let spanning: usize = z
        .barcode
        .intervals
        .iter()
        .filter(|iv| iv.start == 0 && iv.end + 1 == nodes)
        .map(|iv| iv.multiplicity)
        .sum();
    let zig_ok = nodes == 24 && spanning == 1 && z.longest_other < 24 && z.passed;
    let zig_msg = format!(
        "scale {:.4}, {} nodes, {} full-length interval(s), longest other spans {}",
        z.scale, nodes, spanning, z.longest_other
    );
    ((fiber_ok, fiber_msg), (zig_ok, zig_msg))
}

fn identification_check() -> Outcome {
    let d = grid_laplacian();
    let basis = dct_flow_basis(&d);
    let r = identification(72, &d, &basis);
    (
        r.grid_resolution == 72 && r.max_shift_violation <= 1e-12,
        format!("max shift violation {:.3e} on 72×72", r.max_shift_violation),
    )
}

fn oracle() -> Outcome {
    let r = oracle_equivalence(200, 8, &[2, 3], 1).expect("oracle run");
    (
        r.passed && r.clouds == 200 && r.mismatches.is_empty(),
        format!("{} clouds, {} comparisons, {} mismatches", r.clouds, r.comparisons, r.mismatches.len()),
    )
}

fn differential() -> Outcome {
    let r = differential_reduction(50, 1).expect("differential run");
    (
        r.passed && r.filtrations == 50 && r.mismatches.is_empty(),
        format!("{} filtrations, {} intervals, {} mismatches", r.filtrations, r.intervals_compared, r.mismatches.len()),
    )
}

fn roundtrip() -> Outcome {
    let r = flo_roundtrip(100, 1).expect("round trip");
    (
        r.passed && r.fields == 100 && r.failures.is_empty(),
        format!("{} fields, {} failures", r.fields, r.failures.len()),
    )
}

fn main() -> ExitCode {
    // libtest-style flags (--nocapture, filters) are accepted and ignored
    let start = Instant::now();
    let results: Vec<(&str, Outcome)> = thread::scope(|s| {
        let torus = s.spawn(|| witness(Shape::FlowTorus));
        let klein = s.spawn(|| witness(Shape::KleinControl));
        let bins = s.spawn(torus_bin_checks);
        let horiz = s.spawn(horizontal);
        let rest = [
            ("circle calibration", circle()),
            ("quotient identification", identification_check()),
            ("oracle equivalence", oracle()),
            ("clearing vs standard reduction", differential()),
            ("flo round-trip", roundtrip()),
        ];
        let (fibers, zigzag) = bins.join().unwrap();
        let mut out = vec![
            ("torus witness signature", torus.join().unwrap()),
            ("klein bottle discrimination", klein.join().unwrap()),
            ("horizontal flow circle", horiz.join().unwrap()),
            ("angle-bin fibers", fibers),
            ("zigzag fiber bundle", zigzag),
        ];
        out.extend(rest);
        out
    });
    let order = [
        "torus witness signature",
        "klein bottle discrimination",
        "circle calibration",
        "horizontal flow circle",
        "angle-bin fibers",
        "zigzag fiber bundle",
        "quotient identification",
        "oracle equivalence",
        "clearing vs standard reduction",
        "flo round-trip",
    ];
    let mut failed = 0;
    println!();
    for (i, name) in order.iter().enumerate() {
        let (ok, msg) = &results.iter().find(|(n, _)| n == name).unwrap().1;
        failed += usize::from(!ok);
        println!("{} [{:>2}] {name}: {msg}", if *ok { "PASS" } else { "FAIL" }, i + 1);
    }
    println!("acceptance: {}/{} passed in {:.1?}", order.len() - failed, order.len(), start.elapsed());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
