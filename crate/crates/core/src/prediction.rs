use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bottleneck {
    Compute,
    MemoryBw,
    InputBw,
    Calibration,
}

impl Bottleneck {
    pub fn as_str(self) -> &'static str {
        match self {
            Bottleneck::Compute => "compute",
            Bottleneck::MemoryBw => "memory_bw",
            Bottleneck::InputBw => "input_bw",
            Bottleneck::Calibration => "calibration",
        }
    }
}

/// A named auxiliary quantity attached to a prediction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    pub unit: String,
}

/// A model output. `ratio` is present exactly when `baseline` is.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub metric: String,
    pub value: f64,
    pub unit: String,
    pub bottleneck: Bottleneck,
    pub baseline: Option<f64>,
    pub ratio: Option<f64>,
    pub extrapolated: bool,
    pub secondary: Vec<Metric>,
    pub notes: Vec<String>,
}

impl Prediction {
    pub fn new(metric: &str, value: f64, unit: &str, bottleneck: Bottleneck) -> Self {
        Prediction {
            metric: metric.to_string(),
            value,
            unit: unit.to_string(),
            bottleneck,
            baseline: None,
            ratio: None,
            extrapolated: false,
            secondary: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn with_baseline(mut self, baseline: f64) -> Self {
        self.baseline = Some(baseline);
        self.ratio = Some(self.value / baseline);
        self
    }

    pub fn extrapolated(mut self, flag: bool) -> Self {
        self.extrapolated |= flag;
        self
    }

    pub fn with_metric(mut self, name: &str, value: f64, unit: &str) -> Self {
        self.secondary.push(Metric {
            name: name.to_string(),
            value,
            unit: unit.to_string(),
        });
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn secondary(&self, name: &str) -> Option<f64> {
        self.secondary
            .iter()
            .find(|m| m.name == name)
            .map(|m| m.value)
    }
}
