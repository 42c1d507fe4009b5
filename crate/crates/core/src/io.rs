//! JSON task-set files.
//!
//! ```json
//! {"tasks":[{"period":20,"deadline":20,"vertices":[{"wcet":2},{"wcet":4}],"edges":[[0,1]]}],"processors":2}
//! ```
//!
//! Priorities follow list order, highest first.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dag::{Dag, DagError};
use crate::task::{DagTask, TaskError, TaskSet};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed task-set JSON at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("task {task}: {source}")]
    Dag {
        task: usize,
        #[source]
        source: DagError,
    },
    #[error("task {task}: {source}")]
    Task {
        task: usize,
        #[source]
        source: TaskError,
    },
    #[error(transparent)]
    TaskSet(#[from] TaskError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexDoc {
    pub wcet: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskDoc {
    pub period: u64,
    pub deadline: u64,
    pub vertices: Vec<VertexDoc>,
    #[serde(default)]
    pub edges: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSetDoc {
    pub tasks: Vec<TaskDoc>,
    pub processors: u64,
}

impl From<&DagTask> for TaskDoc {
    fn from(task: &DagTask) -> Self {
        let dag = task.dag();
        TaskDoc {
            period: task.period(),
            deadline: task.deadline(),
            vertices: dag.wcets().iter().map(|&wcet| VertexDoc { wcet }).collect(),
            edges: dag.edges().iter().map(|&(a, b)| [a, b]).collect(),
        }
    }
}

impl From<&TaskSet> for TaskSetDoc {
    fn from(ts: &TaskSet) -> Self {
        TaskSetDoc {
            tasks: ts.tasks.iter().map(TaskDoc::from).collect(),
            processors: ts.processors,
        }
    }
}

impl TaskDoc {
    pub fn to_task(&self, index: usize) -> Result<DagTask, IoError> {
        let wcets: Vec<u64> = self.vertices.iter().map(|v| v.wcet).collect();
        let edges: Vec<(usize, usize)> = self.edges.iter().map(|&[a, b]| (a, b)).collect();
        let dag = Dag::new(&wcets, &edges).map_err(|source| IoError::Dag { task: index, source })?;
        DagTask::new(dag, self.deadline, self.period).map_err(|source| IoError::Task { task: index, source })
    }
}

impl TaskSetDoc {
    pub fn to_taskset(&self) -> Result<TaskSet, IoError> {
        let tasks = self
            .tasks
            .iter()
            .enumerate()
            .map(|(i, t)| t.to_task(i))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(TaskSet::new(tasks, self.processors)?)
    }
}

pub fn taskset_from_json(text: &str) -> Result<TaskSet, IoError> {
    let doc: TaskSetDoc = serde_json::from_str(text).map_err(|e| IoError::Json {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    doc.to_taskset()
}

/// Pretty-printed JSON with a trailing newline.
pub fn taskset_to_json(ts: &TaskSet) -> String {
    let mut s = serde_json::to_string_pretty(&TaskSetDoc::from(ts)).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn load_taskset(path: impl AsRef<Path>) -> Result<TaskSet, IoError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })?;
    taskset_from_json(&text)
}

pub fn save_taskset(ts: &TaskSet, path: impl AsRef<Path>) -> Result<(), IoError> {
    let path = path.as_ref();
    fs::write(path, taskset_to_json(ts)).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str =
        r#"{"tasks":[{"period":20,"deadline":18,"vertices":[{"wcet":2},{"wcet":4}],"edges":[[0,1]]}],"processors":2}"#;

    #[test]
    fn parse_and_round_trip() {
        let ts = taskset_from_json(SAMPLE).unwrap();
        assert_eq!(ts.processors, 2);
        assert_eq!(ts.tasks[0].work(), 6);
        assert_eq!(ts.tasks[0].deadline(), 18);
        let again = taskset_from_json(&taskset_to_json(&ts)).unwrap();
        assert_eq!(again, ts);
        assert_eq!(taskset_to_json(&again), taskset_to_json(&ts));
    }

    #[test]
    fn errors_carry_locations() {
        let err = taskset_from_json("{\"tasks\": [}").unwrap_err();
        assert!(matches!(err, IoError::Json { line: 1, .. }), "{err}");
        let err = taskset_from_json(
            r#"{"tasks":[{"period":5,"deadline":5,"vertices":[{"wcet":1}],"edges":[[0,3]]}],"processors":1}"#,
        )
        .unwrap_err();
        assert!(matches!(err, IoError::Dag { task: 0, .. }), "{err}");
        let err = taskset_from_json(r#"{"tasks":[],"processors":0}"#).unwrap_err();
        assert!(matches!(err, IoError::TaskSet(TaskError::NoProcessors)));
    }

    #[test]
    fn unknown_fields_rejected() {
        let err = taskset_from_json(r#"{"tasks":[],"processors":1,"extra":3}"#).unwrap_err();
        assert!(matches!(err, IoError::Json { .. }));
    }
}
