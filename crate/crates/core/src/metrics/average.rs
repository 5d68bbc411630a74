use serde_json::{Map, Number, Value};

use super::MetricsReport;

/// Mean of several reports, field by field.
///
/// Reports are combined in ascending seed order so the result does not
/// depend on the order they are passed in. Absent period means are skipped;
/// series of unequal length are padded by repeating their last sample.
pub fn average_reports(reports: &[(u64, &MetricsReport)]) -> MetricsReport {
    let mut sorted: Vec<&(u64, &MetricsReport)> = reports.iter().collect();
    sorted.sort_by_key(|(seed, _)| *seed);
    let values: Vec<Value> = sorted
        .iter()
        .map(|(_, r)| serde_json::to_value(r).expect("report serializes"))
        .collect();
    let refs: Vec<&Value> = values.iter().collect();
    serde_json::from_value(mean_value(&refs)).expect("averaged report has the report's shape")
}

fn mean_value(vs: &[&Value]) -> Value {
    let Some(first) = vs.iter().find(|v| !v.is_null()) else {
        return Value::Null;
    };
    match first {
        Value::Number(_) => {
            let xs: Vec<f64> = vs.iter().filter_map(|v| v.as_f64()).collect();
            let m = xs.iter().sum::<f64>() / xs.len() as f64;
            Number::from_f64(m).map_or(Value::Null, Value::Number)
        }
        Value::Object(obj) => {
            let mut out = Map::new();
            for key in obj.keys() {
                let children: Vec<&Value> = vs.iter().map(|v| v.get(key).unwrap_or(&Value::Null)).collect();
                out.insert(key.clone(), mean_value(&children));
            }
            Value::Object(out)
        }
        Value::Array(_) => {
            let arrays: Vec<&Vec<Value>> = vs.iter().filter_map(|v| v.as_array()).collect();
            let len = arrays.iter().map(|a| a.len()).max().unwrap_or(0);
            let items = (0..len)
                .map(|i| {
                    let column: Vec<&Value> = arrays.iter().filter_map(|a| a.get(i).or_else(|| a.last())).collect();
                    mean_value(&column)
                })
                .collect();
            Value::Array(items)
        }
        other => (*other).clone(),
    }
}
