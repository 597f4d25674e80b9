//! `key.path=value` overrides applied to a JSON document before parsing.

use serde_json::{Map, Value};

/// The value is read as JSON when it parses, as a string otherwise, so
/// `time.steps=640` sets a number and `scheme.scheme=CN` a string.
pub fn apply(doc: &mut Value, assignment: &str) -> Result<(), String> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| format!("--set {assignment}: expected KEY=VALUE"))?;
    if key.is_empty() {
        return Err(format!("--set {assignment}: empty key"));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (n, part) in parts.iter().enumerate() {
        let last = n + 1 == parts.len();
        node = match node {
            Value::Array(items) => {
                let i: usize = part
                    .parse()
                    .map_err(|_| format!("--set {key}: `{part}` is not an array index"))?;
                let len = items.len();
                items
                    .get_mut(i)
                    .ok_or_else(|| format!("--set {key}: index {i} out of range (length {len})"))?
            }
            Value::Object(map) => map
                .entry(part.to_string())
                .or_insert_with(|| Value::Object(Map::new())),
            _ => return Err(format!("--set {key}: `{part}` is inside a scalar")),
        };
        if last {
            *node = value;
            return Ok(());
        }
    }
    unreachable!("split yields at least one part")
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn nested_and_typed() {
        let mut d = json!({"time": {"steps": 20}, "spots": [90, 100]});
        apply(&mut d, "time.steps=640").unwrap();
        apply(&mut d, "scheme.scheme=CN").unwrap();
        apply(&mut d, "spots.1=110").unwrap();
        assert_eq!(d, json!({"time": {"steps": 640}, "scheme": {"scheme": "CN"}, "spots": [90, 110]}));
    }

    #[test]
    fn bad_assignments() {
        let mut d = json!({"a": 1, "b": [1]});
        assert!(apply(&mut d, "a").is_err());
        assert!(apply(&mut d, "a.b=2").is_err());
        assert!(apply(&mut d, "b.x=2").is_err());
        assert!(apply(&mut d, "b.3=2").is_err());
    }
}
