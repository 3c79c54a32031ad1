use serde_json::Value;

/// Depth-first, pre-order flattening of a JSON tree: one line per primitive
/// leaf, made of the key path (object keys and decimal array indices) and
/// the leaf's text form, separated by single spaces. Line breaks inside keys
/// or values become spaces so each leaf stays on one line.
pub fn json_leaf_lines(root: &Value) -> Vec<String> {
    let mut lines = Vec::new();
    let mut path: Vec<String> = Vec::new();
    walk(root, &mut path, &mut lines);
    lines
}

fn walk(node: &Value, path: &mut Vec<String>, lines: &mut Vec<String>) {
    match node {
        Value::Object(map) => {
            for (k, v) in map {
                path.push(flatten_breaks(k));
                walk(v, path, lines);
                path.pop();
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                path.push(i.to_string());
                walk(v, path, lines);
                path.pop();
            }
        }
        leaf => {
            let text = match leaf {
                Value::String(s) => flatten_breaks(s),
                other => other.to_string(),
            };
            let mut line = path.join(" ");
            if !line.is_empty() {
                line.push(' ');
            }
            line.push_str(&text);
            lines.push(line);
        }
    }
}

fn flatten_breaks(s: &str) -> String {
    if s.contains(['\n', '\r']) {
        s.replace("\r\n", " ").replace(['\n', '\r'], " ")
    } else {
        s.to_string()
    }
}

/// Number of primitive values in the tree.
pub fn count_leaves(root: &Value) -> usize {
    match root {
        Value::Object(map) => map.values().map(count_leaves).sum(),
        Value::Array(items) => items.iter().map(count_leaves).sum(),
        _ => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn nested_objects() {
        assert_eq!(json_leaf_lines(&json!({"a": {"b": 1, "c": "x"}})), ["a b 1", "a c x"]);
    }

    #[test]
    fn array_indices() {
        assert_eq!(json_leaf_lines(&json!({"a": [true, null]})), ["a 0 true", "a 1 null"]);
    }

    #[test]
    fn containers_without_leaves_emit_nothing() {
        assert!(json_leaf_lines(&json!({"a": {}, "b": []})).is_empty());
        assert_eq!(json_leaf_lines(&json!(3.5)), ["3.5"]);
    }

    #[test]
    fn multiline_values_stay_on_one_line() {
        let lines = json_leaf_lines(&json!({"d": "one\ntwo\r\nthree"}));
        assert_eq!(lines, ["d one two three"]);
    }
}
