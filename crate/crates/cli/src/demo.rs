//! Reference checks on the double Mach–Zehnder preset.

use num_complex::Complex64 as C;
use serde_json::{json, Value};
use std::f64::consts::FRAC_1_SQRT_2 as S;

use timesym::format::{real_text, round_sig};
use timesym::pilot::{matched_reverse_quantile, PilotWave, Quantile};
use timesym::pointer::{measure_backward, measure_forward, MeasurementSetup};
use timesym::rng::derive_seed;
use timesym::twotime::{
    abl_distribution, abl_probability, certainty_report, measured_distribution, spin_network, spin_observable,
    spin_state, two_state_at_cut, ProjectorSet, SpinDirection,
};
use timesym::{hilbert::Adjoint, preset_double_mz, Bra, Cut, Ket, Network};

const TOL: f64 = 1e-12;
const RETRACE_RUNS: u64 = 1000;
const POINTER_RUNS: u64 = 1000;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DemoOutcome {
    pub seed: u64,
    pub samples: u64,
    pub checks: Vec<Check>,
}

impl DemoOutcome {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> Value {
        let passed = self.checks.iter().filter(|c| c.pass).count();
        json!({
            "command": "demo",
            "seed": self.seed,
            "samples": self.samples,
            "checks": self.checks.iter().map(|c| json!({"name": c.name, "pass": c.pass, "detail": c.detail})).collect::<Vec<_>>(),
            "passed": passed,
            "failed": self.checks.len() - passed,
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            s.push_str(&format!("{}  {}  [{}]\n", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail));
        }
        let passed = self.checks.iter().filter(|c| c.pass).count();
        s.push_str(&format!(
            "{passed}/{} checks passed (seed {}, {} samples)\n",
            self.checks.len(),
            self.seed,
            self.samples
        ));
        s
    }
}

type Outcome = Result<(bool, String), String>;

fn ket(entries: &[(&str, C)]) -> Ket {
    Ket::from_entries(entries.iter().copied())
}

fn bra(entries: &[(&str, C)]) -> Bra {
    Bra::from_entries(entries.iter().copied())
}

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn forward_matches(net: &Network, cut: usize, want: Ket) -> Outcome {
    let got = net.evolve(&Ket::basis("a"), Cut(0), Cut(cut)).map_err(|e| e.to_string())?;
    Ok((got.approx_eq(&want, TOL), got.to_string()))
}

fn backward_chain(net: &Network) -> Outcome {
    let want = [
        (4, bra(&[("f", c(S, 0.0)), ("e", c(0.0, -S))])),
        (2, bra(&[("d", c(0.0, -1.0))])),
        (0, bra(&[("a", c(-S, 0.0)), ("b", c(0.0, -S))])),
    ];
    let mut ok = true;
    let mut shown = Vec::new();
    for (cut, w) in want {
        let got = net.evolve(&Bra::basis("g"), net.final_cut(), Cut(cut)).map_err(|e| e.to_string())?;
        ok &= got.approx_eq(&w, TOL);
        shown.push(got.to_string());
    }
    Ok((ok, shown.join(" -> ")))
}

fn generalized_state(net: &Network) -> Outcome {
    let tsv = two_state_at_cut(net, &Ket::basis("a"), &Bra::basis("g"), Cut(1)).map_err(|e| e.to_string())?;
    let shown = tsv.display_form().to_string();
    Ok((shown == "0.707106781187 ⟨d| (-i|c⟩ + |d⟩)", shown))
}

fn which_path(net: &Network, cut: usize, mode: &str) -> Outcome {
    let tsv = two_state_at_cut(net, &Ket::basis("a"), &Bra::basis("g"), Cut(cut)).map_err(|e| e.to_string())?;
    let set = ProjectorSet::which_path(net.live_modes(Cut(cut))).map_err(|e| e.to_string())?;
    let p = abl_probability(&tsv, &set, mode).map_err(|e| e.to_string())?;
    Ok(((p - 1.0).abs() <= TOL, format!("prob({mode}) = {}", real_text(p))))
}

fn certainty(net: &Network) -> Outcome {
    let report = certainty_report(net, &Ket::basis("a"), &Bra::basis("g")).map_err(|e| e.to_string())?;
    let got: Vec<(usize, String)> = report.iter().map(|e| (e.cut.0, e.mode.to_string())).collect();
    let want: Vec<(usize, String)> = [(1, "d"), (2, "d"), (3, "e"), (4, "e")].iter().map(|(k, m)| (*k, m.to_string())).collect();
    let shown = got.iter().map(|(k, m)| format!("cut {k} {m}")).collect::<Vec<_>>().join(", ");
    Ok((got == want, shown))
}

fn spin() -> Outcome {
    let n = SpinDirection::normalize([1.0, 2.0, 2.0]).map_err(|e| e.to_string())?;
    let net = spin_network();
    let tsv = two_state_at_cut(&net, &spin_state(SpinDirection::x(), true), &spin_state(n, true).adjoint(), Cut(0))
        .map_err(|e| e.to_string())?;
    let px = abl_distribution(&tsv, &spin_observable(SpinDirection::x()).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?[0]
        .1;
    let pn = abl_distribution(&tsv, &spin_observable(n).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?[0].1;
    Ok((
        (px - 1.0).abs() <= TOL && (pn - 1.0).abs() <= TOL,
        format!("n = (1,2,2)/3: prob(x: +1/2) = {}, prob(n: +1/2) = {}", real_text(px), real_text(pn)),
    ))
}

fn measured(net: &Network) -> Outcome {
    let set = ProjectorSet::which_path(net.live_modes(Cut(1))).map_err(|e| e.to_string())?;
    let dist = measured_distribution(net, &Ket::basis("a"), &Bra::basis("g"), Cut(1), &set).map_err(|e| e.to_string())?;
    let pd = dist.iter().find(|(l, _)| l == "d").map(|(_, p)| *p).unwrap_or(0.0);
    Ok(((pd - 1.0).abs() <= TOL, format!("prob(d | measured, then g) = {}", real_text(pd))))
}

fn pointer(seed: u64) -> Outcome {
    let setup = MeasurementSetup::from_pairs([("up", 0.5), ("down", -0.5)]).map_err(|e| e.to_string())?;
    let sys = ket(&[("up", c(S, 0.0)), ("down", c(0.0, S))]);
    let mut ok = true;
    for i in 0..POINTER_RUNS {
        let s = derive_seed(seed, i);
        let f = measure_forward(&setup, &sys, 0.0, s).map_err(|e| e.to_string())?;
        let b = measure_backward(&setup, &sys.adjoint(), 0.0, s).map_err(|e| e.to_string())?;
        for r in [&f, &b] {
            // decode with the forward formula q2 − q1 and compare with the recorded result
            let k = setup.decode(r.q1(), r.q2());
            ok &= k.map(|k| setup.eigenvalues()[k]) == Some(r.deduced);
        }
    }
    Ok((ok, format!("{POINTER_RUNS} forward and {POINTER_RUNS} backward runs")))
}

fn bohm_forward(net: &Network, samples: u64, seed: u64) -> Result<Vec<(String, bool, String)>, String> {
    let wave = PilotWave::forward(net, &Ket::basis("a")).map_err(|e| e.to_string())?;
    let stats = wave.ensemble(samples, seed).map_err(|e| e.to_string())?;
    let pg = stats.frequency("G");
    let via_c = stats.conditional_fraction_through("G", "c").unwrap_or(0.0);
    let via_d = stats.conditional_fraction_through("H", "d").unwrap_or(0.0);
    // three binomial standard deviations, never tighter than 0.005
    let tol = (3.0 * (0.25 / samples as f64).sqrt()).max(0.005);
    Ok(vec![
        (format!("P(G) = 0.5 ± {}", real_text(round_sig(tol, 2))), (pg - 0.5).abs() <= tol, format!("P(G) = {}", real_text(pg))),
        ("P(path=c | G)=1".into(), via_c == 1.0, real_text(via_c)),
        ("P(path=d | H)=1".into(), via_d == 1.0, real_text(via_d)),
    ])
}

fn bohm_reversed_alone(net: &Network, samples: u64, seed: u64) -> Outcome {
    let wave = PilotWave::reversed(net, &Bra::basis("g")).map_err(|e| e.to_string())?;
    let stats = wave.ensemble(samples, seed).map_err(|e| e.to_string())?;
    let in_a = stats.conditional_paths.get("a").cloned().unwrap_or_default();
    let total: u64 = in_a.values().sum();
    let gfd: u64 = in_a
        .iter()
        .filter(|(p, _)| p.iter().map(|m| m.as_str()).eq(["g", "f", "d"]))
        .map(|(_, c)| *c)
        .sum();
    let flagged = wave.diagnostics().iter().any(|d| d.contains("empty-wave component absent"));
    Ok((
        total > 0 && gfd == total && flagged,
        format!(
            "{gfd}/{total} runs ending in a went g,f,d; {} of runs end in a; empty-wave warning {}",
            real_text(stats.frequency("a")),
            if flagged { "raised" } else { "missing" }
        ),
    ))
}

fn bohm_retrace(net: &Network, seed: u64) -> Outcome {
    let fwd = PilotWave::forward(net, &Ket::basis("a")).map_err(|e| e.to_string())?;
    let full = bra(&[("g", c(S, 0.0)), ("h", c(0.0, -S))]);
    let back = PilotWave::reversed(net, &full).map_err(|e| e.to_string())?;
    let mut ok = true;
    for i in 0..RETRACE_RUNS {
        let q0 = timesym::rng::unit_interval(&mut timesym::rng::rng_from_seed(derive_seed(seed, i)));
        let f = fwd.trajectory(Quantile::initial(q0).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let p = matched_reverse_quantile(&f, &back).ok_or("no matched quantile")?;
        let Ok(q) = Quantile::initial(p) else {
            continue;
        };
        let r = back.trajectory(q).map_err(|e| e.to_string())?;
        let mut modes = r.modes();
        modes.reverse();
        ok &= modes == f.modes();
    }
    Ok((ok, format!("{RETRACE_RUNS} matched runs, no empty-wave warning: {}", back.diagnostics().is_empty())))
}

pub fn run(seed: u64, samples: u64) -> DemoOutcome {
    let net = preset_double_mz();
    let mut checks = Vec::new();
    let mut push = |name: &str, outcome: Outcome| {
        let (pass, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
        checks.push(Check { name: name.to_string(), pass, detail });
    };
    push("|a⟩ after BS1 = (|c⟩ + i|d⟩)/√2", forward_matches(&net, 1, ket(&[("c", c(S, 0.0)), ("d", c(0.0, S))])));
    push("|a⟩ after BS2 = i|e⟩", forward_matches(&net, 3, ket(&[("e", c(0.0, 1.0))])));
    push(
        "|a⟩ after BS3 = (-|g⟩ + i|h⟩)/√2",
        forward_matches(&net, net.final_cut().0, ket(&[("g", c(-S, 0.0)), ("h", c(0.0, S))])),
    );
    push("⟨g| backwards: (⟨f| - i⟨e|)/√2, -i⟨d|, -(⟨a| + i⟨b|)/√2", backward_chain(&net));
    push("generalized state between BS1 and BS2", generalized_state(&net));
    push("prob(D=1)=1 between BS1 and BS2", which_path(&net, 1, "d"));
    push("prob(path e)=1 between BS2 and BS3", which_path(&net, 3, "e"));
    push("certain paths d then e", certainty(&net));
    push("spin: pre +x, post +n, sigma_x and sigma_n both certain", spin());
    push("which-path measured at BS1-BS2: always d", measured(&net));
    push("pointer readings: a_l = a_n", pointer(seed));
    match bohm_forward(&net, samples, seed) {
        Ok(items) => {
            for (name, pass, detail) in items {
                push(&name, Ok((pass, detail)));
            }
        }
        Err(e) => push("Bohm forward ensemble", Err(e)),
    }
    push("reversed from ⟨g| alone: detected in a via g, f, d", bohm_reversed_alone(&net, samples, seed));
    push("reversed from (⟨g| - i⟨h|)/√2 retraces forward paths", bohm_retrace(&net, seed));
    DemoOutcome { seed, samples, checks }
}
