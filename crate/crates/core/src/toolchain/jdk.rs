//! Real JVM toolchain: `javac`, the launcher jar, and optional JaCoCo.

use std::ffi::OsString;
use std::io::{ErrorKind, Read};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitStatus, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;
use std::time::Duration;

use tempfile::TempDir;
use wait_timeout::ChildExt;

use super::shim::{launcher_error, parse_shim_output};
use super::{CompileOutcome, CompiledProgram, JavaSource, JavaToolchain, RunOptions, RunOutput, ToolchainError};

#[derive(Debug, Clone)]
pub struct JdkToolchain {
    pub javac: PathBuf,
    pub java: PathBuf,
    pub shim_jar: PathBuf,
    /// JUnit and any project dependencies.
    pub classpath: Vec<PathBuf>,
    pub jacoco_agent: Option<PathBuf>,
    /// `jacococli.jar`, used to turn execution data into XML.
    pub jacoco_cli: Option<PathBuf>,
    pub compile_timeout: Duration,
}

impl JdkToolchain {
    /// Uses `javac` and `java` from `PATH`.
    pub fn new(shim_jar: impl Into<PathBuf>) -> Self {
        JdkToolchain {
            javac: "javac".into(),
            java: "java".into(),
            shim_jar: shim_jar.into(),
            classpath: Vec::new(),
            jacoco_agent: None,
            jacoco_cli: None,
            compile_timeout: Duration::from_secs(120),
        }
    }

    /// Fails with [`ToolchainError::Missing`] when `javac` cannot be started.
    pub fn check_available(&self) -> Result<(), ToolchainError> {
        let mut cmd = Command::new(&self.javac);
        cmd.arg("-version");
        run_bounded(cmd, Duration::from_secs(30))
            .map_err(|e| missing(&self.javac, e))?;
        Ok(())
    }
}

fn missing(tool: &Path, e: ToolchainError) -> ToolchainError {
    match e {
        ToolchainError::Io(io) if io.kind() == ErrorKind::NotFound => {
            ToolchainError::Missing(format!("{} not found", tool.display()))
        }
        other => other,
    }
}

fn join_classpath(parts: &[PathBuf]) -> Result<OsString, ToolchainError> {
    std::env::join_paths(parts).map_err(|e| ToolchainError::Protocol(e.to_string()))
}

struct Finished {
    status: ExitStatus,
    stdout: String,
    stderr: String,
}

/// Runs `cmd` to completion, killing it after `timeout`. `Ok(None)` means it
/// timed out.
fn run_bounded(mut cmd: Command, timeout: Duration) -> Result<Option<Finished>, ToolchainError> {
    let mut child = cmd
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()?;
    let drain = |mut r: Box<dyn Read + Send>| {
        thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = r.read_to_end(&mut buf);
            String::from_utf8_lossy(&buf).into_owned()
        })
    };
    let out = drain(Box::new(child.stdout.take().expect("piped")));
    let err = drain(Box::new(child.stderr.take().expect("piped")));
    let status = match child.wait_timeout(timeout)? {
        Some(s) => s,
        None => {
            let _ = child.kill();
            let _ = child.wait();
            return Ok(None);
        }
    };
    Ok(Some(Finished {
        status,
        stdout: out.join().unwrap_or_default(),
        stderr: err.join().unwrap_or_default(),
    }))
}

impl JavaToolchain for JdkToolchain {
    fn compile(&self, sources: &[JavaSource]) -> Result<CompileOutcome, ToolchainError> {
        let dir = tempfile::Builder::new().prefix("t2t-javac").tempdir()?;
        let src_root = dir.path().join("src");
        let classes = dir.path().join("classes");
        std::fs::create_dir_all(&classes)?;
        let mut files = Vec::new();
        for s in sources {
            let path = src_root.join(&s.path);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(&path, &s.content)?;
            files.push(path);
        }
        let mut cmd = Command::new(&self.javac);
        cmd.arg("-d").arg(&classes).args(["-encoding", "UTF-8", "-proc:none", "-nowarn"]);
        if !self.classpath.is_empty() {
            cmd.arg("-cp").arg(join_classpath(&self.classpath)?);
        }
        cmd.args(&files);
        let done = run_bounded(cmd, self.compile_timeout).map_err(|e| missing(&self.javac, e))?;
        let Some(done) = done else {
            return Ok(CompileOutcome::Failed {
                diagnostics: "javac timed out".into(),
            });
        };
        if !done.status.success() {
            return Ok(CompileOutcome::Failed {
                diagnostics: format!("{}{}", done.stderr, done.stdout),
            });
        }
        Ok(CompileOutcome::Compiled(Box::new(JdkProgram {
            toolchain: self.clone(),
            dir,
            runs: AtomicUsize::new(0),
        })))
    }
}

struct JdkProgram {
    toolchain: JdkToolchain,
    dir: TempDir,
    runs: AtomicUsize,
}

impl JdkProgram {
    fn classes(&self) -> PathBuf {
        self.dir.path().join("classes")
    }

    fn shim_command(&self, test_class: &str, exec_file: Option<&Path>) -> Result<Command, ToolchainError> {
        let tc = &self.toolchain;
        let mut cp = vec![self.classes()];
        cp.extend(tc.classpath.iter().cloned());
        let mut cmd = Command::new(&tc.java);
        if let (Some(agent), Some(exec)) = (&tc.jacoco_agent, exec_file) {
            let mut flag = OsString::from("-javaagent:");
            flag.push(agent);
            flag.push("=destfile=");
            flag.push(exec);
            cmd.arg(flag);
        }
        cmd.arg("-jar")
            .arg(&tc.shim_jar)
            .arg("--classpath")
            .arg(join_classpath(&cp)?)
            .arg("--class")
            .arg(test_class);
        Ok(cmd)
    }

    fn coverage_report(&self, exec: &Path, n: usize) -> Result<Option<String>, ToolchainError> {
        let Some(cli) = &self.toolchain.jacoco_cli else {
            return Ok(None);
        };
        if !exec.exists() {
            return Ok(None);
        }
        let xml = self.dir.path().join(format!("jacoco-{n}.xml"));
        let mut cmd = Command::new(&self.toolchain.java);
        cmd.arg("-jar")
            .arg(cli)
            .arg("report")
            .arg(exec)
            .arg("--classfiles")
            .arg(self.classes())
            .arg("--sourcefiles")
            .arg(self.dir.path().join("src"))
            .arg("--xml")
            .arg(&xml);
        match run_bounded(cmd, Duration::from_secs(120))? {
            Some(done) if done.status.success() => Ok(Some(std::fs::read_to_string(xml)?)),
            Some(done) => {
                log::warn!("jacoco report failed: {}", done.stderr.trim());
                Ok(None)
            }
            None => Ok(None),
        }
    }
}

impl CompiledProgram for JdkProgram {
    fn run_tests(&self, test_class: &str, opts: &RunOptions) -> Result<RunOutput, ToolchainError> {
        let n = self.runs.fetch_add(1, Ordering::SeqCst);
        let exec = (opts.coverage && self.toolchain.jacoco_agent.is_some())
            .then(|| self.dir.path().join(format!("jacoco-{n}.exec")));
        let cmd = self.shim_command(test_class, exec.as_deref())?;
        let done = run_bounded(cmd, opts.timeout).map_err(|e| missing(&self.toolchain.java, e))?;
        let Some(done) = done else {
            return Ok(RunOutput::TimedOut);
        };
        match done.status.code() {
            Some(0) | Some(1) => {
                let results = parse_shim_output(&done.stdout)?;
                let coverage_xml = match &exec {
                    Some(exec) => self.coverage_report(exec, n)?,
                    None => None,
                };
                Ok(RunOutput::Completed {
                    results,
                    coverage_xml,
                })
            }
            _ => Ok(RunOutput::LauncherFault {
                detail: launcher_error(&done.stdout).unwrap_or_else(|| done.stderr.trim().to_string()),
            }),
        }
    }
}

#[cfg(all(test, unix))]
mod tests {
    use std::os::unix::fs::PermissionsExt;

    use super::*;
    use crate::toolchain::ShimStatus;

    fn script(dir: &Path, name: &str, body: &str) -> PathBuf {
        let path = dir.join(name);
        std::fs::write(&path, format!("#!/bin/sh\n{body}\n")).unwrap();
        std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
        path
    }

    /// Stand-ins for `javac` and the launcher that follow the same
    /// command-line and output contracts.
    fn fake_toolchain(dir: &Path) -> JdkToolchain {
        let javac = script(
            dir,
            "javac",
            r#"for a in "$@"; do case "$a" in *.java) if grep -q BROKEN "$a"; then echo "$a:3: error: <identifier> expected" >&2; exit 1; fi;; esac; done; exit 0"#,
        );
        let java = script(
            dir,
            "java",
            r#"while [ $# -gt 0 ]; do [ "$1" = "--class" ] && cls="$2"; shift; done
case "$cls" in
  demo.GreenTest) echo '{"test_method":"testAdd","status":"Passed","duration_ms":1}'; exit 0;;
  demo.MixedTest) echo '{"test_method":"testAdd","status":"Passed","duration_ms":1}'
                  echo '{"test_method":"testNpe","status":"Errored","failure_class":"java.lang.NullPointerException","duration_ms":0}'
                  echo 'java.lang.NullPointerException' >&2; exit 1;;
  demo.SlowTest) sleep 5; exit 0;;
  *) echo '{"error":"ClassNotFound","class":"'"$cls"'"}'; exit 2;;
esac"#,
        );
        JdkToolchain {
            javac,
            java,
            ..JdkToolchain::new("/opt/shim.jar")
        }
    }

    fn compiled(tc: &JdkToolchain) -> Box<dyn CompiledProgram> {
        match tc.compile(&[JavaSource::new("demo/Calc.java", "package demo; class Calc {}")]).unwrap() {
            CompileOutcome::Compiled(p) => p,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn compile_failure_carries_diagnostics() {
        let bin = tempfile::tempdir().unwrap();
        let tc = fake_toolchain(bin.path());
        let out = tc.compile(&[JavaSource::new("demo/T.java", "BROKEN")]).unwrap();
        match out {
            CompileOutcome::Failed { diagnostics } => assert!(diagnostics.contains("expected")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn launcher_results_and_exit_codes() {
        let bin = tempfile::tempdir().unwrap();
        let tc = fake_toolchain(bin.path());
        let p = compiled(&tc);
        let opts = RunOptions::default();
        let green = p.run_tests("demo.GreenTest", &opts).unwrap();
        assert!(green.all_passed());
        let mixed = p.run_tests("demo.MixedTest", &opts).unwrap();
        let RunOutput::Completed { results, .. } = &mixed else { panic!() };
        assert_eq!(results[1].status, ShimStatus::Errored);
        assert!(!mixed.all_passed());
        assert_eq!(
            p.run_tests("demo.Nope", &opts).unwrap(),
            RunOutput::LauncherFault { detail: "ClassNotFound".into() }
        );
    }

    #[test]
    fn slow_launcher_is_killed() {
        let bin = tempfile::tempdir().unwrap();
        let tc = fake_toolchain(bin.path());
        let p = compiled(&tc);
        let started = std::time::Instant::now();
        let opts = RunOptions { timeout: Duration::from_millis(300), coverage: false };
        assert_eq!(p.run_tests("demo.SlowTest", &opts).unwrap(), RunOutput::TimedOut);
        assert!(started.elapsed() < Duration::from_secs(4));
    }

    #[test]
    fn shim_invocation_shape() {
        let bin = tempfile::tempdir().unwrap();
        let mut tc = fake_toolchain(bin.path());
        tc.classpath = vec!["/lib/junit.jar".into()];
        tc.jacoco_agent = Some("/lib/jacocoagent.jar".into());
        let dir = tempfile::tempdir().unwrap();
        let program = JdkProgram { toolchain: tc, dir, runs: AtomicUsize::new(0) };
        let cmd = program.shim_command("demo.CalcTest", Some(Path::new("/tmp/x.exec"))).unwrap();
        let args: Vec<String> = cmd.get_args().map(|a| a.to_string_lossy().into_owned()).collect();
        assert_eq!(args[0], "-javaagent:/lib/jacocoagent.jar=destfile=/tmp/x.exec");
        assert_eq!(&args[1..3], ["-jar", "/opt/shim.jar"]);
        assert_eq!(args[3], "--classpath");
        assert!(args[4].ends_with(":/lib/junit.jar"));
        assert_eq!(&args[5..], ["--class", "demo.CalcTest"]);
    }

    #[test]
    fn absent_javac_is_reported_missing() {
        let tc = JdkToolchain {
            javac: "/nonexistent/javac".into(),
            ..JdkToolchain::new("shim.jar")
        };
        assert!(matches!(tc.check_available(), Err(ToolchainError::Missing(_))));
        assert!(matches!(tc.compile(&[]), Err(ToolchainError::Missing(_))));
    }
}
