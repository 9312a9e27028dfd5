use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use super::{CorpusError, DocumentRecord, ExclusionReason, Stage};

/// Accepted header spellings per field, compared case-insensitively.
pub const COLUMN_ALIASES: &[(&str, &[&str])] = &[
    ("id", &["id", "eid", "record id", "doc_id"]),
    ("title", &["title", "article title", "document title"]),
    ("abstract", &["abstract", "description"]),
    ("year", &["year", "publication year", "pubyear", "py"]),
    ("doi", &["doi"]),
    ("keywords", &["author keywords", "keywords", "index keywords", "de"]),
    ("venue", &["source title", "journal", "venue", "source"]),
];

const MANDATORY: &[&str] = &["title", "abstract", "year"];

/// Placeholders some databases use in place of an empty abstract.
const NO_ABSTRACT_MARKERS: &[&str] = &["[no abstract available]", "no abstract available"];

fn column_index(headers: &csv::StringRecord, field: &str) -> Option<usize> {
    let aliases = COLUMN_ALIASES
        .iter()
        .find(|(f, _)| *f == field)
        .map(|(_, a)| *a)
        .unwrap_or(&[]);
    for alias in aliases {
        if let Some(i) = headers
            .iter()
            .position(|h| h.trim().trim_start_matches('\u{feff}').eq_ignore_ascii_case(alias))
        {
            return Some(i);
        }
    }
    None
}

pub fn ingest_metadata(path: &Path) -> Result<Vec<DocumentRecord>, CorpusError> {
    let file = std::fs::File::open(path).map_err(|e| CorpusError::io(path, e))?;
    ingest_metadata_from_reader(file)
}

pub fn ingest_metadata_from_reader<R: Read>(input: R) -> Result<Vec<DocumentRecord>, CorpusError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let headers = reader.headers()?.clone();

    let missing: Vec<String> = MANDATORY
        .iter()
        .filter(|f| column_index(&headers, f).is_none())
        .map(|f| f.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(CorpusError::MissingColumns(missing));
    }
    let col = |f: &str| column_index(&headers, f);
    let (title_i, abstract_i, year_i) = (col("title").unwrap(), col("abstract").unwrap(), col("year").unwrap());
    let (id_i, doi_i, kw_i, venue_i) = (col("id"), col("doi"), col("keywords"), col("venue"));

    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for (row, result) in reader.records().enumerate() {
        let rec = result?;
        let get = |i: usize| rec.get(i).unwrap_or("").trim().to_string();
        let id = match id_i {
            Some(i) if !get(i).is_empty() => get(i),
            _ => format!("doc-{:05}", row + 1),
        };
        if !seen.insert(id.clone()) {
            return Err(CorpusError::DuplicateId(id));
        }
        let year_raw = get(year_i);
        let year = year_raw
            .parse::<i32>()
            .ok()
            .filter(|y| (1900..=2100).contains(y))
            .ok_or(CorpusError::InvalidYear {
                row: row + 1,
                value: year_raw.clone(),
            })?;
        let mut abstract_text = get(abstract_i);
        if NO_ABSTRACT_MARKERS
            .iter()
            .any(|m| abstract_text.eq_ignore_ascii_case(m))
        {
            abstract_text.clear();
        }
        let flag = abstract_text.is_empty().then_some(ExclusionReason::NoAbstract);
        let keywords = kw_i
            .map(|i| {
                get(i)
                    .split(';')
                    .map(str::trim)
                    .filter(|k| !k.is_empty())
                    .map(String::from)
                    .collect()
            })
            .unwrap_or_default();
        let doi = doi_i.map(get).filter(|d| !d.is_empty());
        records.push(DocumentRecord {
            id,
            doi,
            title: get(title_i),
            abstract_text,
            keywords,
            year,
            venue: venue_i.map(get).unwrap_or_default(),
            stage: Stage::Identified,
            flag,
            exclusion: None,
            retrieved_via: None,
            fulltext: None,
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_only_is_empty() {
        let recs = ingest_metadata_from_reader("Title,Abstract,Year\n".as_bytes()).unwrap();
        assert!(recs.is_empty());
    }

    #[test]
    fn blank_abstract_is_flagged() {
        let csv = "Title,Abstract,Year,DOI\n\
                   A,\"first, with comma\",2020,10.1/a\n\
                   B,,2021,\n\
                   C,third,2019,10.1016/c\n";
        let recs = ingest_metadata_from_reader(csv.as_bytes()).unwrap();
        assert_eq!(recs.len(), 3);
        let flagged: Vec<_> = recs.iter().filter(|r| r.flag == Some(ExclusionReason::NoAbstract)).collect();
        assert_eq!(flagged.len(), 1);
        assert_eq!(flagged[0].title, "B");
        assert!(recs.iter().all(|r| r.stage == Stage::Identified));
        assert_eq!(recs[0].abstract_text, "first, with comma");
        assert_eq!(recs[1].doi, None);
    }

    #[test]
    fn aliases_are_case_insensitive() {
        let csv = "EID,Document Title,ABSTRACT,Publication Year,Author Keywords\n\
                   e1,T,[No abstract available],2001,lca; machine learning\n";
        let recs = ingest_metadata_from_reader(csv.as_bytes()).unwrap();
        assert_eq!(recs[0].id, "e1");
        assert_eq!(recs[0].keywords, vec!["lca", "machine learning"]);
        assert_eq!(recs[0].flag, Some(ExclusionReason::NoAbstract));
    }

    #[test]
    fn missing_columns_rejected() {
        let err = ingest_metadata_from_reader("Title,Year\nx,2000\n".as_bytes()).unwrap_err();
        match err {
            CorpusError::MissingColumns(c) => assert_eq!(c, vec!["abstract".to_string()]),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn duplicate_ids_rejected() {
        let csv = "id,Title,Abstract,Year\na,t,x,2000\na,t,y,2001\n";
        assert!(matches!(
            ingest_metadata_from_reader(csv.as_bytes()),
            Err(CorpusError::DuplicateId(id)) if id == "a"
        ));
    }

    #[test]
    fn year_out_of_range_rejected() {
        let csv = "Title,Abstract,Year\nt,x,1850\n";
        assert!(matches!(
            ingest_metadata_from_reader(csv.as_bytes()),
            Err(CorpusError::InvalidYear { row: 1, .. })
        ));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = ingest_metadata(Path::new("/nonexistent/x.csv")).unwrap_err();
        assert!(matches!(err, CorpusError::Io { .. }));
    }
}
