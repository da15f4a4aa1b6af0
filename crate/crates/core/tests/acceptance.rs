//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test -p statgame --test acceptance`.

mod common;

use std::time::Instant;

use statgame::games::{
    autoencoder_fitness, check_eubo, generalized_bayes_fitness, helmholtz_decomposition,
    local_ctx_left, local_ctx_seq_first, local_ctx_seq_second, mle_game, Continuation, Divergence,
    GameContext, Loss, StatGame, Transform,
};
use statgame::inversion::{invert, kl_divergence, total_variation};
use statgame::lens::{buco_deviation, exact_lens, verify_buco, BayesianLens};
use statgame::markov::{almost_equal, Dist, FiniteSpace, Kernel, Side};
use statgame::optim::{
    gaussian_buco_chain, gaussian_elbo_optimize, gaussian_invert, optimize_autoencoder,
    optimize_fitness, Gaussian1D, GradientMode, LinearGaussianKernel, OptimConfig, Sense,
    SimplexFamily,
};
use statgame::random::InstanceRng;
use statgame::weight::Rational;
use statgame::Result;

const SEED: u64 = 20_240_601;

type Q = Rational;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Result<Verdict> {
    Ok(Verdict {
        pass,
        detail: detail.into(),
    })
}

fn rng(criterion: u64, index: usize) -> InstanceRng {
    InstanceRng::for_instance(SEED + criterion, index as u64)
}

fn optical_composition() -> Result<Verdict> {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut failures = 0;
    for i in 0..200 {
        let mut g = rng(1, i);
        let (x, y, z) = (g.space("X", 1, 6), g.space("Y", 1, 6), g.space("Z", 1, 6));
        let c: Kernel<Q> = g.kernel(&x, &y, false);
        let d = g.kernel(&y, &z, false);
        let pi = g.dist(&x, false);
        worst = worst.max(buco_deviation(&c, &d, &pi)?);
        if !verify_buco(&c, &d, &pi, 0.0)? {
            failures += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        failures == 0 && worst == 0.0 && secs < 10.0,
        format!("200 pairs, {failures} failures, max joint deviation {worst}, {secs:.2} s"),
    )
}

fn three_stage_inversion() -> Result<Verdict> {
    let mut failures = 0;
    for i in 0..50 {
        let mut g = rng(2, i);
        let s: Vec<FiniteSpace> = ["X", "Y", "Z", "W"]
            .iter()
            .map(|l| g.space(l, 1, 5))
            .collect();
        let c: Kernel<Q> = g.kernel(&s[0], &s[1], false);
        let d = g.kernel(&s[1], &s[2], false);
        let e = g.kernel(&s[2], &s[3], false);
        let pi = g.dist(&s[0], false);
        let whole = c.then(&d)?.then(&e)?;
        let direct = invert(&whole, &pi)?;
        let (lc, ld, le) = (exact_lens(&c), exact_lens(&d), exact_lens(&e));
        let left = lc.then(&ld)?.then(&le)?.update(&pi)?;
        let right = lc.then(&ld.then(&le)?)?.update(&pi)?;
        for back in [&left, &right] {
            let rows_match = direct
                .evidence
                .support()
                .into_iter()
                .all(|w| back.row(w).ok() == direct.posterior.row(w).ok());
            if !rows_match || !almost_equal(back, &direct.posterior, &direct.evidence, 0.0)? {
                failures += 1;
            }
        }
    }
    verdict(
        failures == 0,
        format!("50 triples, both bracketings, {failures} mismatches"),
    )
}

struct FreeEnergyInstance {
    q: Dist<f64>,
    c: Kernel<f64>,
    pi: Dist<f64>,
    y: usize,
}

fn free_energy_instances() -> Vec<FreeEnergyInstance> {
    (0..100)
        .map(|i| {
            let mut g = rng(3, i);
            let (x, ys) = (g.space("X", 1, 6), g.space("Y", 1, 6));
            let sparse = g.coin();
            let c: Kernel<f64> = g.kernel(&x, &ys, !sparse);
            let pi: Dist<f64> = g.dist(&x, !sparse);
            let support = pi.pushforward(&c).unwrap().support();
            let y = support[g.size(0, support.len() - 1)];
            let q = if i % 4 == 0 {
                invert(&c, &pi).unwrap().posterior_at(y).unwrap()
            } else {
                let positive = g.coin();
                g.dist(&x, positive)
            };
            FreeEnergyInstance { q, c, pi, y }
        })
        .collect()
}

fn free_energy_identity() -> Result<Verdict> {
    let (mut worst, mut bound_violations, mut iff_violations) = (0.0f64, 0, 0);
    for inst in free_energy_instances() {
        let r = check_eubo(&inst.q, &inst.c, &inst.pi, inst.y, 1e-12)?;
        worst = worst.max(r.deviation);
        if r.free_energy < r.neg_log_evidence - 1e-12 {
            bound_violations += 1;
        }
        let exact = invert(&inst.c, &inst.pi)?.posterior_at(inst.y)?;
        let kl = kl_divergence(&inst.q, &exact)?;
        if (r.gap().abs() < 1e-12) != (kl < 1e-12) {
            iff_violations += 1;
        }
    }
    verdict(
        worst <= 1e-12 && bound_violations == 0 && iff_violations == 0,
        format!(
            "100 instances, max deviation {worst:.3e}, {bound_violations} bound violations, \
             {iff_violations} gap/divergence disagreements"
        ),
    )
}

fn helmholtz() -> Result<Verdict> {
    let mut worst = 0.0f64;
    for inst in free_energy_instances() {
        let f = check_eubo(&inst.q, &inst.c, &inst.pi, inst.y, 1e-12)?.free_energy;
        let h = helmholtz_decomposition(&inst.q, &inst.c, &inst.pi, inst.y)?;
        let gap = if f == h.free_energy() {
            0.0
        } else {
            (f - h.free_energy()).abs()
        };
        worst = worst.max(gap);
    }
    verdict(
        worst <= 1e-12,
        format!("100 instances, max |F − (U − S)| {worst:.3e}"),
    )
}

fn generalized_bayes_coincidence() -> Result<Verdict> {
    let mut worst = 0.0f64;
    for i in 0..100 {
        let mut g = rng(5, i);
        let (x, y) = (g.space("X", 1, 6), g.space("Y", 1, 6));
        let lens: BayesianLens<f64> = common::lens(&mut g, &x, &y);
        let ctx = common::context(&mut g, &x, &y);
        let loss = Loss::neg_log_density(lens.forward())?;
        let gb = generalized_bayes_fitness(&lens, loss, Divergence::Kl)?(&ctx)?;
        let auto = autoencoder_fitness(&lens, Divergence::Kl)(&ctx)?;
        worst = worst.max((gb - auto).abs());
    }
    verdict(
        worst <= 1e-12,
        format!("100 game/context instances, max fitness gap {worst:.3e}"),
    )
}

fn game_composition() -> Result<Verdict> {
    let mut exact_failures = 0;
    for i in 0..50 {
        let mut g = rng(6, i);
        let s = common::spaces(&mut g, 3, 4);
        let f: StatGame<Q> = common::game(&mut g, &s[0], &s[1]);
        let h: StatGame<Q> = common::game(&mut g, &s[1], &s[2]);
        let ctx = common::context(&mut g, &s[0], &s[2]);
        let (first, second) = common::hand_expanded(&ctx, f.lens(), h.lens());
        let lib_first = local_ctx_seq_first(&ctx, h.lens())?;
        let lib_second = local_ctx_seq_second(&ctx, f.lens())?;
        let same_contexts = lib_first.prior() == first.prior()
            && lib_first.feedback(f.lens())? == first.feedback(f.lens())?
            && lib_second.prior() == second.prior()
            && lib_second.feedback(h.lens())? == second.feedback(h.lens())?;
        let expanded = f.evaluate(&first)? + h.evaluate(&second)?;
        if !same_contexts || f.then(&h)?.evaluate(&ctx)? != expanded {
            exact_failures += 1;
        }
    }
    let mut worst = 0.0f64;
    for i in 0..20 {
        let mut g = rng(6, 1000 + i);
        let s = common::spaces(&mut g, 4, 3);
        let f: StatGame<Q> = common::game(&mut g, &s[0], &s[1]);
        let h: StatGame<Q> = common::game(&mut g, &s[1], &s[2]);
        let k: StatGame<Q> = common::game(&mut g, &s[2], &s[3]);
        let ctx = common::context(&mut g, &s[0], &s[3]);
        let left = f.then(&h)?.then(&k)?.evaluate(&ctx)?;
        let right = f.then(&h.then(&k)?)?.evaluate(&ctx)?;
        worst = worst.max((left - right).abs());
    }
    verdict(
        exact_failures == 0 && worst <= 1e-12,
        format!(
            "50 pairs, {exact_failures} differ from the hand expansion; \
             20 triples, max associativity gap {worst:.3e}"
        ),
    )
}

fn two_local_contexts() -> Result<Verdict> {
    let mut worst = 0.0f64;
    let mut filler_failures = 0;
    for i in 0..50 {
        let mut g = rng(7, i);
        let s = common::spaces(&mut g, 4, 3);
        let f: StatGame<Q> = common::game(&mut g, &s[0], &s[1]);
        let h: StatGame<Q> = common::game(&mut g, &s[2], &s[3]);
        let (pi, pi2): (Dist<Q>, Dist<Q>) = (g.dist(&s[0], true), g.dist(&s[2], true));
        let (k, k2): (Kernel<Q>, Kernel<Q>) =
            (g.kernel(&s[1], &s[1], true), g.kernel(&s[3], &s[3], true));
        let joint = GameContext::simple(pi.tensor(&pi2), Continuation::kernel(k.tensor(&k2)));
        let alone = GameContext::simple(pi.clone(), Continuation::kernel(k.clone()));
        let both = f.tensor(&h).evaluate(&joint)?;
        let sum = f.evaluate(&alone)?
            + h.evaluate(&GameContext::simple(pi2, Continuation::kernel(k2.clone())))?;
        worst = worst.max((both - sum).abs());

        let id = StatGame::identity(&s[2], &s[2]);
        let filled = GameContext::simple(
            pi.tensor(&g.dist(&s[2], true)),
            Continuation::kernel(k.tensor(&g.kernel(&s[2], &s[2], true))),
        );
        let out = s[1].tensor(&s[2]);
        let mixing = GameContext::simple(
            g.dist(&s[0].tensor(&s[2]), true),
            Continuation::kernel(g.kernel(&out, &out, true)),
        );
        let marginal_ok = local_ctx_left(&mixing, id.lens())?.feedback(f.lens())?
            == mixing
                .feedback(&f.lens().tensor(id.lens()))?
                .marginal(&s[1], Side::Left)?;
        if f.tensor(&id).evaluate(&filled)? != f.evaluate(&alone)? || !marginal_ok {
            filler_failures += 1;
        }
    }
    verdict(
        worst <= 1e-12 && filler_failures == 0,
        format!(
            "50 instances, max |tensor − sum| {worst:.3e}, {filler_failures} identity-filler failures"
        ),
    )
}

fn bit() -> FiniteSpace {
    FiniteSpace::range("B", 2).expect("two outcomes")
}

fn bsc() -> Result<Kernel<f64>> {
    Kernel::new(bit(), bit(), vec![vec![0.8, 0.2], vec![0.2, 0.8]])
}

fn simplex_elbo() -> Result<Verdict> {
    let start = Instant::now();
    let c = bsc()?;
    let ctx = GameContext::simple(Dist::uniform(&bit()), Continuation::identity(&bit()));
    let r = optimize_autoencoder(
        &c,
        &ctx,
        &SimplexFamily::uniform(&bit(), &bit()),
        GradientMode::Analytic,
        &OptimConfig::default(),
    )?;
    let secs = start.elapsed().as_secs_f64();
    let exact = invert(&c, &Dist::uniform(&bit()))?.posterior;
    let learned = r.family.kernel()?;
    let mut tv = 0.0f64;
    for y in 0..2 {
        tv = tv.max(total_variation(&learned.row_dist(y)?, &exact.row_dist(y)?)?);
    }
    // The evidence is uniform, so the expected surprisal is ln 2.
    let surprisal = 2f64.ln();
    let gap = (r.run.final_value() - surprisal).abs();
    verdict(
        tv <= 1e-4 && gap <= 1e-6 && r.run.iterations <= 5000 && secs < 5.0,
        format!(
            "max TV {tv:.2e}, |F − ln 2| {gap:.2e}, {} iterations, {secs:.2} s",
            r.run.iterations
        ),
    )
}

fn coin_mle() -> Result<Verdict> {
    let coin = FiniteSpace::new("Coin", ["H", "T"])?;
    let ctx = GameContext::simple(
        Dist::unit(),
        Continuation::empirical(&coin, &coin, &[7, 3])?,
    );
    let r = optimize_fitness(
        |f| Ok(mle_game(&f.state()?, Transform::Log)),
        &ctx,
        &SimplexFamily::uniform(&FiniteSpace::unit(), &coin),
        Sense::Maximize,
        1e-5,
        &OptimConfig::default(),
    )?;
    let theta = r.family.state()?.weights()[0];
    // Closed form: the MLE of a Bernoulli rate is heads / flips.
    let oracle = 7.0 / 10.0;
    verdict(
        (theta - oracle).abs() <= 1e-3,
        format!("θ̂ = {theta:.6}, oracle {oracle}"),
    )
}

fn quadrature(prior: &Gaussian1D, k: &LinearGaussianKernel, y: f64) -> (f64, f64) {
    let n = 100_000;
    let h = 20.0 / n as f64;
    let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for i in 0..=n {
        let x = -10.0 + i as f64 * h;
        let end = if i == 0 || i == n { 0.5 } else { 1.0 };
        let w = end * (prior.log_density(x) + k.log_density(y, x)).exp();
        z += w;
        m1 += w * x;
        m2 += w * x * x;
    }
    let mean = m1 / z;
    (mean, m2 / z - mean * mean)
}

fn gaussian_instance(g: &mut InstanceRng) -> Result<(Gaussian1D, LinearGaussianKernel, f64)> {
    let prior = Gaussian1D::new(g.real(-2.0, 2.0), g.real(0.1, 1.0))?;
    let k = LinearGaussianKernel::new(g.real(-2.0, 2.0), g.real(-2.0, 2.0), g.real(0.1, 4.0))?;
    Ok((prior, k, g.real(-3.0, 3.0)))
}

fn gaussian_backend() -> Result<Verdict> {
    let mut quad = 0.0f64;
    for i in 0..50 {
        let (prior, k, y) = gaussian_instance(&mut rng(10, i))?;
        let post = gaussian_invert(&prior, &k, y);
        let (mean, var) = quadrature(&prior, &k, y);
        quad = quad
            .max((post.mean - mean).abs())
            .max((post.variance - var).abs());
    }
    let mut chain = 0.0f64;
    for i in 0..50 {
        let mut g = rng(10, 1000 + i);
        let (prior, k1, _) = gaussian_instance(&mut g)?;
        let (_, k2, z) = gaussian_instance(&mut g)?;
        chain = chain.max(gaussian_buco_chain(&prior, &k1, &k2, z).deviation());
    }
    let std_normal = Gaussian1D::new(0.0, 1.0)?;
    let r = gaussian_elbo_optimize(
        &std_normal,
        &LinearGaussianKernel::new(1.0, 0.0, 1.0)?,
        2.0,
        &std_normal,
        &OptimConfig::default(),
    )?;
    let log_evidence = Gaussian1D::new(0.0, 2.0)?.log_density(2.0);
    let elbo_gap = (r.run.final_value() + log_evidence).abs();
    let at_posterior = (r.q.mean - 1.0).abs() < 1e-4 && (r.q.variance - 0.5).abs() < 1e-4;
    verdict(
        quad <= 1e-6 && chain <= 1e-8 && elbo_gap < 1e-6 && at_posterior,
        format!(
            "quadrature max error {quad:.2e}, chain max deviation {chain:.2e}, \
             q* = N({:.6}, {:.6}), |F* + ln p(2)| {elbo_gap:.2e}",
            r.q.mean, r.q.variance
        ),
    )
}

fn fixture_spaces() -> Result<Vec<FiniteSpace>> {
    let coin = FiniteSpace::new("Coin", ["H", "T"])?;
    let die = FiniteSpace::range("D", 3)?;
    Ok(vec![
        FiniteSpace::unit(),
        bit(),
        coin.clone(),
        die.clone(),
        coin.tensor(&die),
        FiniteSpace::range("S", 6)?,
    ])
}

fn structural_laws() -> Result<Verdict> {
    let spaces = fixture_spaces()?;
    let mut failures = Vec::new();
    let mut g = rng(11, 0);
    for x in &spaces {
        let id = Kernel::<Q>::identity(x);
        let copy = Kernel::<Q>::copy(x);
        let discard = Kernel::<Q>::discard(x);
        if copy.then(&discard.tensor(&id))? != id
            || copy.then(&id.tensor(&discard))? != id
            || copy.then(&copy.tensor(&id))? != copy.then(&id.tensor(&copy))?
            || copy.then(&Kernel::swap(x, x))? != copy
        {
            failures.push(format!("comonoid on {x}"));
        }
        for y in &spaces {
            for _ in 0..3 {
                let c: Kernel<Q> = g.kernel(x, y, false);
                if c.then(&Kernel::discard(y))? != discard {
                    failures.push(format!("causality {x} ⇸ {y}"));
                }
                let pi: Dist<Q> = g.dist(x, false);
                let d = redraw_off_support(&mut g, &c, &pi)?;
                let e = redraw_off_support(&mut g, &c, &pi)?;
                let other: Kernel<Q> = g.kernel(x, y, false);
                let ae = |a: &Kernel<Q>, b: &Kernel<Q>| almost_equal(a, b, &pi, 0.0);
                let equivalence = ae(&c, &c)?
                    && ae(&c, &d)?
                    && ae(&d, &c)?
                    && ae(&d, &e)?
                    && ae(&c, &e)?
                    && ae(&c, &other)? == ae(&other, &c)?;
                let z = &spaces[g.size(0, spaces.len() - 1)];
                let post: Kernel<Q> = g.kernel(y, z, false);
                let preserved = ae(&c.then(&post)?, &d.then(&post)?)?;
                if !equivalence || !preserved {
                    failures.push(format!("almost-equality {x} ⇸ {y}"));
                }
            }
        }
    }
    for (i, x) in spaces.iter().enumerate() {
        let (y, x2) = (
            &spaces[(i + 1) % spaces.len()],
            &spaces[(i + 2) % spaces.len()],
        );
        let (y2, z, z2) = (
            &spaces[(i + 3) % spaces.len()],
            &spaces[(i + 4) % spaces.len()],
            &spaces[(i + 5) % spaces.len()],
        );
        let f: Kernel<Q> = g.kernel(x, y, false);
        let f2 = g.kernel(y, z, false);
        let h = g.kernel(x2, y2, false);
        let h2 = g.kernel(y2, z2, false);
        if f.tensor(&h).then(&f2.tensor(&h2))? != f.then(&f2)?.tensor(&h.then(&h2)?) {
            failures.push(format!("interchange at {x}, {x2}"));
        }
    }
    let n = spaces.len();
    verdict(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{n} fixture spaces, {} kernel pairs, all exact", n * n * 3)
        } else {
            failures.join("; ")
        },
    )
}

fn redraw_off_support(g: &mut InstanceRng, c: &Kernel<Q>, pi: &Dist<Q>) -> Result<Kernel<Q>> {
    let support = pi.support();
    let mut rows = Vec::with_capacity(c.dom().len());
    for x in 0..c.dom().len() {
        rows.push(if support.contains(&x) {
            c.row(x)?.to_vec()
        } else {
            g.weights(c.cod().len(), false)
        });
    }
    Kernel::new(c.dom().clone(), c.cod().clone(), rows)
}

fn main() {
    type Criterion = (&'static str, fn() -> Result<Verdict>);
    let criteria: [Criterion; 11] = [
        ("optical composition of exact updates", optical_composition),
        ("three-stage inversion", three_stage_inversion),
        ("free-energy identity and bound", free_energy_identity),
        ("energy–entropy decomposition", helmholtz),
        (
            "generalized Bayes with log loss = autoencoder",
            generalized_bayes_coincidence,
        ),
        ("sequential game composition", game_composition),
        ("parallel games in 2-local contexts", two_local_contexts),
        ("simplex free-energy optimization", simplex_elbo),
        ("coin maximum likelihood", coin_mle),
        ("linear-Gaussian backend", gaussian_backend),
        ("structural laws on fixture spaces", structural_laws),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = run().unwrap_or_else(|e| Verdict {
            pass: false,
            detail: format!("error: {e}"),
        });
        if !v.pass {
            failed += 1;
        }
        println!(
            "{} criterion {:>2} {name}: {} [{} ms]",
            if v.pass { "PASS" } else { "FAIL" },
            i + 1,
            v.detail,
            start.elapsed().as_millis()
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
