//! Test-class detection and test → focal matching by file path and name.

use serde::{Deserialize, Serialize};

use super::index::{ClassId, MethodId, MethodInfo, StructuralIndex, Visibility};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchKind {
    PathMatch,
    NameMatch,
    Both,
    Unmatched,
}

/// Something noteworthy that happened while linking a test class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LinkNote {
    /// Path and name heuristics pointed at different classes; path won.
    Disagreement { by_path: ClassId, by_name: ClassId },
    /// The name heuristic found several classes and the path heuristic none.
    AmbiguousMatch { candidates: Vec<ClassId> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestClassLink {
    pub test_class: ClassId,
    /// Present iff `match_kind != Unmatched`.
    pub focal_class: Option<ClassId>,
    pub match_kind: MatchKind,
    pub notes: Vec<LinkNote>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FocalMethodMatch {
    pub method: MethodId,
    /// Several public overloads shared the name; the first in source order won.
    pub ambiguous_overload: bool,
}

/// Classes declaring at least one `@Test` method.
pub fn identify_test_classes(index: &StructuralIndex) -> Vec<ClassId> {
    index
        .class_ids()
        .filter(|&c| is_test_class(index, c))
        .collect()
}

fn is_test_class(index: &StructuralIndex, class: ClassId) -> bool {
    index
        .class(class)
        .methods
        .iter()
        .any(|&m| index.method(m).is_test())
}

/// `FooTest` → `Foo`, `TestFoo` → `Foo`.
pub fn strip_test_affix(name: &str) -> Option<&str> {
    if let Some(base) = name.strip_suffix("Test") {
        if !base.is_empty() {
            return Some(base);
        }
    }
    name.strip_prefix("Test").filter(|b| !b.is_empty())
}

fn file_stem(path: &str) -> &str {
    let file = path.rsplit('/').next().unwrap_or(path);
    file.strip_suffix(".java").unwrap_or(file)
}

/// `src/test/java/a/FooTest.java` → `src/main/java/a/Foo.java`.
pub fn mirrored_main_path(test_path: &str) -> Option<String> {
    let stem = file_stem(test_path);
    let focal = strip_test_affix(stem)?;
    let mut parts: Vec<&str> = test_path.split('/').collect();
    let file_pos = parts.len() - 1;
    let test_dir = parts[..file_pos].iter().position(|p| *p == "test")?;
    parts[test_dir] = "main";
    let file = format!("{focal}.java");
    parts[file_pos] = &file;
    Some(parts.join("/"))
}

fn by_path(test_class: ClassId, index: &StructuralIndex) -> Option<ClassId> {
    let test = index.class(test_class);
    let main_path = mirrored_main_path(&test.file_path)?;
    if !index.has_file(&main_path) {
        return None;
    }
    let wanted = strip_test_affix(file_stem(&test.file_path))?;
    let in_file: Vec<ClassId> = index
        .classes_in_file(&main_path)
        .filter(|&c| index.class(c).top_level)
        .collect();
    in_file
        .iter()
        .copied()
        .find(|&c| index.class(c).simple_name == wanted)
        .or_else(|| in_file.first().copied())
}

fn by_name(test_class: ClassId, index: &StructuralIndex) -> Vec<ClassId> {
    let Some(wanted) = strip_test_affix(&index.class(test_class).simple_name) else {
        return Vec::new();
    };
    index
        .class_ids()
        .filter(|&c| c != test_class)
        .filter(|&c| index.class(c).simple_name == wanted)
        .filter(|&c| !is_test_class(index, c))
        .collect()
}

/// Links a test class to its focal class. Path evidence beats name evidence
/// when both exist and disagree.
pub fn match_focal_class(test_class: ClassId, index: &StructuralIndex) -> TestClassLink {
    let path = by_path(test_class, index);
    let names = by_name(test_class, index);
    let mut notes = Vec::new();
    let unique_name = match names.as_slice() {
        [one] => Some(*one),
        _ => None,
    };
    let (focal, kind) = match (path, unique_name) {
        (Some(p), Some(n)) if p == n => (Some(p), MatchKind::Both),
        (Some(p), Some(n)) => {
            notes.push(LinkNote::Disagreement {
                by_path: p,
                by_name: n,
            });
            (Some(p), MatchKind::PathMatch)
        }
        (Some(p), None) => {
            if names.contains(&p) {
                (Some(p), MatchKind::Both)
            } else {
                (Some(p), MatchKind::PathMatch)
            }
        }
        (None, Some(n)) => (Some(n), MatchKind::NameMatch),
        (None, None) => {
            if names.len() > 1 {
                notes.push(LinkNote::AmbiguousMatch { candidates: names });
            }
            (None, MatchKind::Unmatched)
        }
    };
    TestClassLink {
        test_class,
        focal_class: focal,
        match_kind: kind,
        notes,
    }
}

/// Candidate focal method names for a test method name: `testFoo` → `Foo`,
/// `fooTest` → `foo`.
pub fn focal_name_candidates(test_method: &str) -> Vec<&str> {
    let mut out = Vec::new();
    for prefix in ["test", "Test"] {
        if let Some(rest) = test_method.strip_prefix(prefix) {
            if !rest.is_empty() {
                out.push(rest);
            }
        }
    }
    if let Some(rest) = test_method.strip_suffix("Test") {
        if !rest.is_empty() {
            out.push(rest);
        }
    }
    out
}

/// Equality that ignores the case of the first character only.
pub fn eq_ignore_first_case(a: &str, b: &str) -> bool {
    let mut ca = a.chars();
    let mut cb = b.chars();
    match (ca.next(), cb.next()) {
        (Some(x), Some(y)) => x.to_lowercase().eq(y.to_lowercase()) && ca.as_str() == cb.as_str(),
        (None, None) => true,
        _ => false,
    }
}

/// Finds the public focal method a test method exercises.
pub fn match_focal_method(
    test_method: &MethodInfo,
    focal_class: ClassId,
    index: &StructuralIndex,
) -> Option<FocalMethodMatch> {
    let wanted = focal_name_candidates(&test_method.name);
    let public: Vec<MethodId> = index
        .class(focal_class)
        .methods
        .iter()
        .copied()
        .filter(|&m| index.method(m).visibility == Visibility::Public)
        .collect();
    for name in wanted {
        let hits: Vec<MethodId> = public
            .iter()
            .copied()
            .filter(|&m| eq_ignore_first_case(&index.method(m).name, name))
            .collect();
        if let Some(first) = hits.iter().min_by_key(|m| index.method(**m).span.start) {
            return Some(FocalMethodMatch {
                method: *first,
                ambiguous_overload: hits.len() > 1,
            });
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::super::index::{parse_source, StructuralIndex};
    use super::*;

    fn index(files: &[(&str, &str)]) -> StructuralIndex {
        StructuralIndex::from_fragments(
            "p",
            files.iter().map(|(p, c)| parse_source(p, c)).collect(),
        )
    }

    fn class(idx: &StructuralIndex, name: &str) -> ClassId {
        idx.find_class_by_name(name).unwrap()
    }

    #[test]
    fn no_annotations_no_test_classes() {
        let idx = index(&[("A.java", "class A { void f() {} }")]);
        assert!(identify_test_classes(&idx).is_empty());
    }

    #[test]
    fn foo_test_is_a_test_class() {
        let idx = index(&[(
            "FooTest.java",
            "class FooTest { @Test public void testX() {} void helper() {} }",
        )]);
        assert_eq!(identify_test_classes(&idx), vec![class(&idx, "FooTest")]);
    }

    #[test]
    fn mirrored_path_and_name_give_both() {
        let idx = index(&[
            ("src/main/java/Foo.java", "public class Foo { public int f() { return 1; } }"),
            ("src/test/java/FooTest.java", "class FooTest { @Test public void testF() {} }"),
        ]);
        let link = match_focal_class(class(&idx, "FooTest"), &idx);
        assert_eq!(link.match_kind, MatchKind::Both);
        assert_eq!(link.focal_class, Some(class(&idx, "Foo")));
    }

    #[test]
    fn prefix_form_matches_by_name() {
        let idx = index(&[
            ("lib/x/Foo.java", "public class Foo {}"),
            ("tests/y/TestFoo.java", "class TestFoo { @Test public void testA() {} }"),
        ]);
        let link = match_focal_class(class(&idx, "TestFoo"), &idx);
        assert_eq!(link.match_kind, MatchKind::NameMatch);
        assert_eq!(link.focal_class, Some(class(&idx, "Foo")));
    }

    #[test]
    fn absent_target_is_unmatched() {
        let idx = index(&[("src/test/java/UtilTest.java", "class UtilTest { @Test public void testA() {} }")]);
        let link = match_focal_class(class(&idx, "UtilTest"), &idx);
        assert_eq!(link.match_kind, MatchKind::Unmatched);
        assert_eq!(link.focal_class, None);
    }

    #[test]
    fn ambiguous_name_without_path_is_unmatched_and_reported() {
        let idx = index(&[
            ("a/Foo.java", "package a; public class Foo {}"),
            ("b/Foo.java", "package b; public class Foo {}"),
            ("t/FooTest.java", "class FooTest { @Test public void testA() {} }"),
        ]);
        let link = match_focal_class(class(&idx, "FooTest"), &idx);
        assert_eq!(link.match_kind, MatchKind::Unmatched);
        assert!(matches!(&link.notes[0], LinkNote::AmbiguousMatch { candidates } if candidates.len() == 2));
    }

    #[test]
    fn path_wins_over_disagreeing_name() {
        // The mirrored file declares a differently named class; the name
        // heuristic finds the real `Foo` elsewhere.
        let idx = index(&[
            ("src/main/java/Foo.java", "public class FooImpl {}"),
            ("other/Foo.java", "public class Foo {}"),
            ("src/test/java/FooTest.java", "class FooTest { @Test public void testA() {} }"),
        ]);
        let link = match_focal_class(class(&idx, "FooTest"), &idx);
        assert_eq!(link.match_kind, MatchKind::PathMatch);
        assert_eq!(link.focal_class, Some(class(&idx, "FooImpl")));
        assert!(matches!(link.notes[0], LinkNote::Disagreement { .. }));
    }

    #[test]
    fn mirrored_path_rules() {
        assert_eq!(
            mirrored_main_path("src/test/java/a/FooTest.java").as_deref(),
            Some("src/main/java/a/Foo.java")
        );
        assert_eq!(
            mirrored_main_path("src/test/java/TestFoo.java").as_deref(),
            Some("src/main/java/Foo.java")
        );
        assert_eq!(mirrored_main_path("src/it/FooTest.java"), None);
        assert_eq!(mirrored_main_path("src/test/java/Test.java"), None);
    }

    fn focal_fixture() -> StructuralIndex {
        index(&[
            (
                "src/main/java/CSVFormat.java",
                "public class CSVFormat {\n public char getEscape() { return 'x'; }\n public int add(int a, int b) { return a + b; }\n public double add(double a, double b) { return a + b; }\n int hidden() { return 0; }\n}",
            ),
            (
                "src/test/java/CSVFormatTest.java",
                "class CSVFormatTest {\n @Test public void testGetEscape() {}\n @Test public void testFooBar() {}\n @Test public void testAdd() {}\n @Test public void testHidden() {}\n @Test public void getEscapeTest() {}\n}",
            ),
        ])
    }

    fn test_method<'a>(idx: &'a StructuralIndex, name: &str) -> &'a MethodInfo {
        idx.methods.iter().find(|m| m.name == name).unwrap()
    }

    #[test]
    fn focal_method_by_prefix_strip() {
        let idx = focal_fixture();
        let focal = class(&idx, "CSVFormat");
        let m = match_focal_method(test_method(&idx, "testGetEscape"), focal, &idx).unwrap();
        assert_eq!(idx.method(m.method).name, "getEscape");
        assert!(!m.ambiguous_overload);
        let m = match_focal_method(test_method(&idx, "getEscapeTest"), focal, &idx).unwrap();
        assert_eq!(idx.method(m.method).name, "getEscape");
    }

    #[test]
    fn focal_method_absent() {
        let idx = focal_fixture();
        let focal = class(&idx, "CSVFormat");
        assert!(match_focal_method(test_method(&idx, "testFooBar"), focal, &idx).is_none());
        // package-private methods are not candidates
        assert!(match_focal_method(test_method(&idx, "testHidden"), focal, &idx).is_none());
    }

    #[test]
    fn overloads_pick_first_and_flag() {
        let idx = focal_fixture();
        let focal = class(&idx, "CSVFormat");
        let m = match_focal_method(test_method(&idx, "testAdd"), focal, &idx).unwrap();
        assert!(m.ambiguous_overload);
        assert_eq!(idx.method(m.method).signature, "add(int,int)");
    }

    #[test]
    fn first_char_case_rule() {
        assert!(eq_ignore_first_case("getEscape", "GetEscape"));
        assert!(!eq_ignore_first_case("getescape", "GetEscape"));
        assert_eq!(focal_name_candidates("testFoo"), vec!["Foo"]);
        assert_eq!(focal_name_candidates("test"), Vec::<&str>::new());
    }
}
