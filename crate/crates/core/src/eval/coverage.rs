use roxmltree::{Document, Node, ParsingOptions};

use super::EvalError;

fn attr<'a>(n: Node<'a, '_>, name: &str) -> Result<&'a str, EvalError> {
    n.attribute(name)
        .ok_or_else(|| EvalError::MalformedReport(format!("<{}> without `{name}`", n.tag_name().name())))
}

fn count(n: Node, name: &str) -> Result<u64, EvalError> {
    let raw = attr(n, name)?;
    raw.parse()
        .map_err(|_| EvalError::MalformedReport(format!("`{name}` is not a count: {raw:?}")))
}

fn elements<'a, 'i>(n: Node<'a, 'i>, tag: &'a str) -> impl Iterator<Item = Node<'a, 'i>> + 'a {
    n.children().filter(move |c| c.is_element() && c.tag_name().name() == tag)
}

/// Line coverage of the source file holding `focal_class` in a JaCoCo XML
/// report. `focal_class` is a dotted fqn (`org.demo.Calc`, nested classes
/// as `Outer.Inner` or `Outer$Inner`) or a bare simple name.
pub fn measure_coverage(report_xml: &str, focal_class: &str) -> Result<(u64, u64), EvalError> {
    let opts = ParsingOptions {
        allow_dtd: true,
        ..ParsingOptions::default()
    };
    let doc = Document::parse_with_options(report_xml, opts).map_err(|e| EvalError::MalformedReport(e.to_string()))?;
    let root = doc.root_element();
    if root.tag_name().name() != "report" {
        return Err(EvalError::MalformedReport(format!("root element is <{}>", root.tag_name().name())));
    }

    let wanted = focal_class.replace('$', ".");
    let (wanted_pkg, wanted_name) = match wanted.rsplit_once('.') {
        Some(_) => {
            // Split where the package ends: the first segment starting upper-case.
            let segs: Vec<&str> = wanted.split('.').collect();
            let cut = segs
                .iter()
                .position(|s| s.starts_with(|c: char| c.is_uppercase()))
                .unwrap_or(segs.len() - 1);
            (Some(segs[..cut].join("/")), segs[cut..].join("$"))
        }
        None => (None, wanted.clone()),
    };
    let top_level = wanted_name.split('$').next().unwrap_or(&wanted_name).to_string();

    for package in elements(root, "package") {
        let pkg_name = attr(package, "name")?;
        if wanted_pkg.as_deref().is_some_and(|p| p != pkg_name) {
            continue;
        }
        let qualified = |simple: &str| {
            if pkg_name.is_empty() {
                simple.to_string()
            } else {
                format!("{pkg_name}/{simple}")
            }
        };
        let hit = elements(package, "class").find(|c| {
            let name = c.attribute("name").unwrap_or("");
            name == qualified(&wanted_name) || name == qualified(&top_level)
        });
        let Some(class) = hit else { continue };
        let file = class
            .attribute("sourcefilename")
            .map(str::to_string)
            .unwrap_or_else(|| format!("{top_level}.java"));
        let Some(sourcefile) = elements(package, "sourcefile").find(|s| s.attribute("name") == Some(file.as_str())) else {
            // Classes without executable code (interfaces) may carry no lines.
            return Ok((0, 0));
        };
        let mut covered = 0;
        let mut coverable = 0;
        for line in elements(sourcefile, "line") {
            coverable += 1;
            if count(line, "ci")? > 0 {
                covered += 1;
            }
        }
        return Ok((covered, coverable));
    }
    Err(EvalError::ClassNotInReport(focal_class.to_string()))
}

/// Covered over coverable, 0 when nothing is coverable.
pub fn coverage_ratio(covered: u64, coverable: u64) -> f64 {
    if coverable == 0 {
        0.0
    } else {
        covered as f64 / coverable as f64
    }
}
