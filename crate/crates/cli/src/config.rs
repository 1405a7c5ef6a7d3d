use serde_json::Value;

/// Appends `--key value` for every config entry whose flag is absent from `argv`.
///
/// Top-level keys apply to every command; an object under a command name
/// (`"rate": {...}`) applies to that command only and overrides top-level keys.
pub fn merge(argv: &[String]) -> Result<Vec<String>, String> {
    let Some(path) = config_path(argv) else {
        return Ok(argv.to_vec());
    };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read config `{path}`: {e}"))?;
    let root: Value = serde_json::from_str(&text).map_err(|e| format!("bad config `{path}`: {e}"))?;
    let Value::Object(root) = root else {
        return Err(format!("config `{path}` must be a JSON object"));
    };
    let command = argv
        .iter()
        .skip(1)
        .find(|a| !a.starts_with('-') && matches!(a.as_str(), "body" | "extremal" | "rate" | "approx" | "fekete" | "reproduce"))
        .cloned();

    let mut entries: Vec<(String, Value)> = Vec::new();
    for (k, v) in &root {
        if !v.is_object() {
            entries.push((k.clone(), v.clone()));
        }
    }
    if let Some(Value::Object(sub)) = command.as_ref().and_then(|c| root.get(c)) {
        for (k, v) in sub {
            entries.retain(|(e, _)| e != k);
            entries.push((k.clone(), v.clone()));
        }
    }

    let mut out = argv.to_vec();
    for (key, value) in entries {
        let flag = format!("--{}", key.replace('_', "-"));
        if flag == "--config" || given(argv, &flag) {
            continue;
        }
        match value {
            Value::Bool(true) => out.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                for item in items {
                    out.push(flag.clone());
                    out.push(scalar(&item)?);
                }
            }
            other => {
                out.push(flag);
                out.push(scalar(&other)?);
            }
        }
    }
    Ok(out)
}

fn scalar(v: &Value) -> Result<String, String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        other => Err(format!("unsupported config value `{other}`")),
    }
}

fn given(argv: &[String], flag: &str) -> bool {
    argv.iter().any(|a| a == flag || a.starts_with(&format!("{flag}=")))
}

fn config_path(argv: &[String]) -> Option<String> {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}
