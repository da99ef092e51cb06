use std::fmt;

use flexeig::io::format_f64;

/// Line-oriented `key = value` output.
#[derive(Default)]
pub struct Summary {
    lines: Vec<(String, String)>,
}

impl Summary {
    pub fn text(&mut self, key: &str, value: impl fmt::Display) -> &mut Self {
        self.lines.push((key.to_string(), value.to_string()));
        self
    }

    pub fn num(&mut self, key: &str, value: f64) -> &mut Self {
        self.text(key, format_f64(value))
    }

    pub fn opt(&mut self, key: &str, value: Option<f64>) -> &mut Self {
        if let Some(v) = value {
            self.num(key, v);
        }
        self
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.lines {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}
