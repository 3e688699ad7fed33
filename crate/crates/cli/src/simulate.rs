//! `simulate`: raw coupling draws, one row per draw.

use concentra::dips::{graph_array, mww_array, DipsArray};
use concentra::harness::{Cell, MonteCarlo, Table};
use concentra::patterns::PatternPair;
use concentra::ustat::UStatModel;
use concentra::Result;

use crate::opts::{OutputArgs, SimArgs, SimulateFamily};
use crate::{bad, instance, monte_carlo, Outcome};

pub fn run(family: SimulateFamily) -> (OutputArgs, Result<Outcome>) {
    match family {
        SimulateFamily::Ustat { kernel, sim, out } => {
            let res = instance::ustat(&kernel).and_then(|inst| {
                let mut o = ustat(&inst.model, &sim)?;
                o.table = o.table.meta("kernel", inst.kernel.name());
                if inst.degenerate {
                    o.warnings.push(instance::DEGENERACY_WARNING.into());
                }
                Ok(o)
            });
            (out, res)
        }
        SimulateFamily::Dips { array, sim, out } => {
            let res = instance::dips_array(&array).and_then(|a| dips("dips", &a, &sim));
            (out, res)
        }
        SimulateFamily::Mww { n1, n2, sim, out } => {
            let res = mww_array(n1, n2).and_then(|a| dips("mww", &a, &sim));
            (out, res)
        }
        SimulateFamily::Graph { graphs, sim, out } => {
            let res = instance::graphs(&graphs).and_then(|(e1, e2)| {
                let mut a = graph_array(&e1, &e2)?;
                if let Some(b) = graphs.b {
                    a = a.with_sup_bound(b)?;
                }
                dips("graph", &a, &sim)
            });
            (out, res)
        }
        SimulateFamily::Pattern { pattern, direction, sim, out } => {
            let res = instance::pattern_pair(&pattern).and_then(|p| patterns(&p, direction, &sim));
            (out, res)
        }
    }
}

fn collect(
    family: &str,
    columns: &[&str],
    sim: &SimArgs,
    chunk: impl Fn(u64, u64) -> Result<Vec<Vec<Cell>>> + Sync + Send,
) -> Result<(Table, MonteCarlo)> {
    let mc = monte_carlo(sim.seed, sim.samples, sim.threads)?;
    let parts = mc.map_chunks(chunk)?;
    let mut cols = vec!["sample"];
    cols.extend_from_slice(columns);
    let mut t =
        Table::new(family, &cols).meta("check", "simulate").meta("seed", mc.seed()).meta("samples", mc.samples());
    for (i, mut row) in parts.into_iter().flatten().enumerate() {
        row.insert(0, Cell::Int(i as u64));
        t.push_row(row);
    }
    Ok((t, mc))
}

fn outcome(t: Table, mc: &MonteCarlo) -> Outcome {
    let mut o = Outcome::new(t);
    o.threads = mc.threads();
    o
}

pub fn ustat(model: &UStatModel, sim: &SimArgs) -> Result<Outcome> {
    let d = model.d();
    let names: Vec<String> = std::iter::once("replaced_index".to_string())
        .chain((1..=d).map(|k| format!("w{k}")))
        .chain((1..=d).map(|k| format!("w{k}_prime")))
        .collect();
    let columns: Vec<&str> = names.iter().map(String::as_str).collect();
    let (mut t, mc) = collect("ustat", &columns, sim, |seed, count| {
        Ok(model
            .sampler(seed)
            .take(count as usize)
            .map(|s| {
                let mut row = vec![Cell::Int(s.replaced_index as u64 + 1)];
                row.extend(s.w.iter().chain(&s.w_prime).map(|&x| Cell::Num(x)));
                row
            })
            .collect())
    })?;
    t = t.param("n", model.n() as f64).param("d", d as f64).param("b", model.sup_bound());
    Ok(outcome(t, &mc))
}

pub fn dips(family: &str, array: &DipsArray, sim: &SimArgs) -> Result<Outcome> {
    let n = array.n();
    let columns = ["i", "j", "w1", "w2", "w3", "w1_prime", "w2_prime", "w3_prime"];
    let (mut t, mc) = collect(family, &columns, sim, |seed, count| {
        Ok(array
            .sampler(seed)?
            .take(count as usize)
            .map(|s| {
                let mut row = vec![Cell::Int(s.swap.0 as u64 + 1), Cell::Int(s.swap.1 as u64 + 1)];
                row.extend(s.w(n).iter().chain(&s.w_prime(n)).map(|&x| Cell::Num(x)));
                row
            })
            .collect())
    })?;
    t = t.meta("array", array.kind()).param("n", n as f64).param("b", array.sup_bound());
    Ok(outcome(t, &mc))
}

pub fn patterns(pair: &PatternPair, direction: usize, sim: &SimArgs) -> Result<Outcome> {
    if !(1..=2).contains(&direction) {
        return bad(format!("--direction must be 1 or 2, got {direction}"));
    }
    let columns = ["direction", "window_start", "w1", "w2", "w1_biased", "w2_biased"];
    let (mut t, mc) = collect("pattern", &columns, sim, |seed, count| {
        Ok(pair
            .sampler(direction - 1, seed)?
            .take(count as usize)
            .map(|s| {
                vec![
                    Cell::Int(direction as u64),
                    Cell::Int(s.window_start as u64 + 1),
                    Cell::Int(s.w[0] as u64),
                    Cell::Int(s.w[1] as u64),
                    Cell::Int(s.w_biased[0] as u64),
                    Cell::Int(s.w_biased[1] as u64),
                ]
            })
            .collect())
    })?;
    let [p1, p2] = pair.patterns();
    t = t
        .meta("pattern1", p1.to_string())
        .meta("pattern2", p2.to_string())
        .param("n", pair.n() as f64)
        .param("m", pair.m() as f64);
    Ok(outcome(t, &mc))
}
