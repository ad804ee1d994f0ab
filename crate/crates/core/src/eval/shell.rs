use crate::toolchain::JavaSource;

/// A generated test method wrapped in a compilable test class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestShell {
    pub class_name: String,
    pub fqn: String,
    pub source: JavaSource,
}

/// Shell class names are unique per batch position so several shells can
/// be compiled into one suite.
pub fn shell_class_name(index: usize) -> String {
    format!("T2tGenerated{index}Test")
}

/// Wraps one test method in a JUnit 4 class placed in the focal package.
pub fn wrap_in_shell(method: &str, package: Option<&str>, class_name: &str) -> TestShell {
    let mut text = String::new();
    if let Some(pkg) = package {
        text.push_str(&format!("package {pkg};\n\n"));
    }
    text.push_str("import java.util.*;\n");
    text.push_str("import org.junit.After;\nimport org.junit.Before;\nimport org.junit.Test;\n");
    text.push_str("import static org.junit.Assert.*;\n");
    if let Some(pkg) = package {
        text.push_str(&format!("import {pkg}.*;\n"));
    }
    text.push_str(&format!("\npublic class {class_name} {{\n\n"));
    for line in method.trim_end().lines() {
        if line.trim().is_empty() {
            text.push('\n');
        } else {
            text.push_str("    ");
            text.push_str(line);
            text.push('\n');
        }
    }
    text.push_str("}\n");
    let (fqn, path) = match package {
        Some(pkg) => (
            format!("{pkg}.{class_name}"),
            format!("{}/{class_name}.java", pkg.replace('.', "/")),
        ),
        None => (class_name.to_string(), format!("{class_name}.java")),
    };
    TestShell {
        class_name: class_name.to_string(),
        fqn,
        source: JavaSource::new(path, text),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shell_layout() {
        let s = wrap_in_shell("@Test\npublic void t() {\n\n}", Some("org.demo"), &shell_class_name(3));
        assert_eq!(s.fqn, "org.demo.T2tGenerated3Test");
        assert_eq!(s.source.path, "org/demo/T2tGenerated3Test.java");
        assert!(s.source.content.starts_with("package org.demo;\n"));
        assert!(s.source.content.contains("import org.demo.*;\n"));
        assert!(s.source.content.contains("    @Test\n    public void t() {\n\n    }\n}\n"));

        let bare = wrap_in_shell("@Test public void t() {}", None, "X");
        assert_eq!((bare.fqn.as_str(), bare.source.path.as_str()), ("X", "X.java"));
        assert!(!bare.source.content.contains("package"));
    }
}
