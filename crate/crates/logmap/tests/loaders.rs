mod common;

use std::path::Path;

use logmap::data::load_data;
use logmap::schema::{load_schema, parse_schema};
use logmap::tasks::{load_benchmark, load_tasks};
use logmap::LoadError;
use logmap_core::catalog::{AttrRef, KeyRole};

use common::{fixture, load};

const SMALL: &str = r#"
[[relation]]
name = "Journal"

[[relation.attribute]]
name = "jid"
type = "numeric"
key = "primary"

[[relation.attribute]]
name = "name"
type = "text"

[[relation]]
name = "publication"

[[relation.attribute]]
name = "pid"
type = "numeric"
key = "primary"

[[relation.attribute]]
name = "jid"
type = "numeric"
key = "foreign"
references = "journal.jid"

[[relation.attribute]]
name = "year"
type = "numeric"
"#;

fn p() -> &'static Path {
    Path::new("schema.toml")
}

#[test]
fn schema_parses_and_lowercases() {
    let s = parse_schema(SMALL, p()).unwrap();
    assert!(s.relation("journal").is_some());
    let fk = s.attribute(&AttrRef::new("publication", "jid")).unwrap();
    assert_eq!(fk.key, KeyRole::Foreign);
    assert_eq!(s.fk_edges().len(), 1);
}

#[test]
fn schema_errors_carry_location() {
    let bad = SMALL.replace("type = \"text\"", "type = \"blob\"");
    match parse_schema(&bad, p()) {
        Err(LoadError::Format { line, .. }) => assert!(line > 0),
        other => panic!("{other:?}"),
    }
    let typo = SMALL.replace("references =", "refs =");
    assert!(matches!(parse_schema(&typo, p()), Err(LoadError::Format { .. })));
    let bad_ref = SMALL.replace("journal.jid", "journal");
    assert!(matches!(parse_schema(&bad_ref, p()), Err(LoadError::Format { .. })));
    let dangling = SMALL.replace("journal.jid", "venue.vid");
    assert!(matches!(parse_schema(&dangling, p()), Err(LoadError::Catalog { .. })));
    assert!(matches!(load_schema(Path::new("/no/such/schema.toml")), Err(LoadError::Io { .. })));
}

#[test]
fn data_loads_and_rejects_bad_files() {
    let s = parse_schema(SMALL, p()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    // publication.csv is absent on purpose: that is only a warning
    std::fs::write(dir.path().join("journal.csv"), "jid,name\n1,TODS\n2,VLDB Journal\n").unwrap();
    let index = load_data(&s, dir.path()).unwrap();
    let names = index.text_values(&AttrRef::new("journal", "name")).unwrap();
    assert_eq!(names.len(), 2);

    std::fs::write(dir.path().join("journal.csv"), "jid,title\n1,TODS\n").unwrap();
    match load_data(&s, dir.path()) {
        Err(LoadError::Format { line: 1, message, .. }) => assert!(message.contains("journal.title")),
        other => panic!("{other:?}"),
    }
    std::fs::write(dir.path().join("journal.csv"), "jid,name\n1,TODS\nx,VLDB\n").unwrap();
    assert!(matches!(load_data(&s, dir.path()), Err(LoadError::Format { line: 3, .. })));
}

#[test]
fn fixtures_load() {
    let mas = load("mas");
    assert_eq!(mas.schema.relations().len(), 15);
    let yelp = load("yelp");
    assert_eq!(yelp.schema.relations().len(), 7);
    let tasks = load_tasks(&fixture("mas/tasks.json")).unwrap();
    for r in &tasks.records {
        for k in &r.keywords {
            k.to_task().unwrap();
        }
    }
    let bench = load_benchmark(&fixture("yelp/benchmark.json")).unwrap();
    assert_eq!(bench.records.len(), 19);
    assert!(bench.records.iter().all(|r| r.tasks.len() == r.gold_mapping.len()));
}

#[test]
fn benchmark_errors_and_default_name() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tiny.json");
    let record = r#"{"keywords": [{"keyword": "x", "context": "select"}], "gold_sql": "SELECT a FROM b", "gold_mapping": [null]}"#;
    std::fs::write(&path, format!(r#"{{"records": [{record}]}}"#)).unwrap();
    assert_eq!(load_benchmark(&path).unwrap().name, "tiny");

    std::fs::write(&path, record.replace("select", "having")).unwrap();
    assert!(matches!(load_benchmark(&path), Err(LoadError::Format { .. })));
    let wrapped = format!(r#"{{"records": [{}]}}"#, record.replace("select", "having"));
    std::fs::write(&path, wrapped).unwrap();
    match load_benchmark(&path) {
        Err(LoadError::Format { message, .. }) => assert!(message.contains("unknown context")),
        other => panic!("{other:?}"),
    }
}
