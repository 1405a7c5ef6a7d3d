use serde_json::{json, Map, Value};

/// `%.12g`: twelve significant digits, trailing zeros trimmed.
pub fn g12(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.11e}", x);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim(&format!("{:.*}", decimals, x)).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim(mantissa), sign, exp.abs())
    }
}

fn trim(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// A JSON number rounded to twelve significant digits; non-finite values become null.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let rounded: f64 = g12(x).parse().unwrap();
    json!(rounded)
}

pub struct Header {
    pub version: &'static str,
    pub argv: Vec<String>,
    pub seed: u64,
}

impl Header {
    pub fn comment(&self) -> String {
        format!(
            "# polybody {}\n# argv: {}\n# seed: {}\n",
            self.version,
            self.argv.join(" "),
            self.seed
        )
    }

    pub fn json(&self) -> Value {
        json!({ "version": self.version, "argv": self.argv, "seed": self.seed })
    }

    /// `body` with a leading `header` entry.
    pub fn wrap(&self, body: Map<String, Value>) -> String {
        let mut m = Map::new();
        m.insert("header".into(), self.json());
        m.extend(body);
        let mut s = serde_json::to_string_pretty(&Value::Object(m)).unwrap();
        s.push('\n');
        s
    }
}

pub fn csv_row(values: &[f64]) -> String {
    let cells: Vec<String> = values.iter().map(|&v| g12(v)).collect();
    cells.join(",")
}
