//! CSV serialization.

use std::io::Write;

use kelly_opt::SweepRow;

pub const SWEEP_HEADER: [&str; 11] = [
    "u_m",
    "strategy",
    "c",
    "g_star",
    "f",
    "n",
    "N",
    "mean_growth",
    "stderr",
    "ruin_count",
    "seed",
];

/// Formats a float with 13 significant digits.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.12e}")
    } else {
        x.to_string()
    }
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Growth unit for printed rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Unit {
    #[default]
    Nats,
    Bits,
}

impl Unit {
    pub fn scale(self, nats: f64) -> f64 {
        match self {
            Unit::Nats => nats,
            Unit::Bits => nats / std::f64::consts::LN_2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Unit::Nats => "nats",
            Unit::Bits => "bits",
        }
    }
}

pub fn write_sweep<W: Write>(out: W, rows: &[SweepRow], unit: Unit) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        w.write_record([
            num(r.u_m),
            r.strategy.clone(),
            opt_num(r.c),
            opt_num(r.g_star),
            opt_num(r.f),
            r.n.to_string(),
            r.paths.to_string(),
            num(unit.scale(r.mean_growth)),
            num(unit.scale(r.stderr)),
            r.ruin_count.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// A flat named record, written as a two-line CSV table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OutputRow {
    pub fields: Vec<(String, String)>,
}

impl OutputRow {
    pub fn new(command: &str) -> Self {
        let mut row = OutputRow::default();
        row.text("command", command);
        row
    }

    pub fn text(&mut self, name: &str, value: &str) -> &mut Self {
        self.fields.push((name.to_string(), value.to_string()));
        self
    }

    pub fn number(&mut self, name: &str, value: f64) -> &mut Self {
        self.fields.push((name.to_string(), num(value)));
        self
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.fields
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
    }

    pub fn write<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.fields.iter().map(|(k, _)| k))?;
        w.write_record(self.fields.iter().map(|(_, v)| v))?;
        w.flush()?;
        Ok(())
    }
}
