//! Validation of extracted commands against the safety policy.

use std::path::PathBuf;

use super::extract::ExtractedCommand;

/// The only programs a generated command may invoke.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Program {
    Ffmpeg,
    Ffprobe,
    Ffplay,
    Vvencapp,
    VvencFFapp,
}

impl Program {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "ffmpeg" => Some(Program::Ffmpeg),
            "ffprobe" => Some(Program::Ffprobe),
            "ffplay" => Some(Program::Ffplay),
            "vvencapp" => Some(Program::Vvencapp),
            "vvencFFapp" => Some(Program::VvencFFapp),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Program::Ffmpeg => "ffmpeg",
            Program::Ffprobe => "ffprobe",
            Program::Ffplay => "ffplay",
            Program::Vvencapp => "vvencapp",
            Program::VvencFFapp => "vvencFFapp",
        }
    }
}

/// Machine-readable rejection reasons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum RejectionReason {
    #[error("ProgramNotAllowed")]
    ProgramNotAllowed,
    #[error("ShellMetacharacter")]
    ShellMetacharacter,
    #[error("PathEscape")]
    PathEscape,
    #[error("EmptyArgv")]
    EmptyArgv,
}

#[derive(Debug, Clone)]
pub struct ExecPolicy {
    pub allowlist: Vec<String>,
    pub workdir: PathBuf,
}

impl ExecPolicy {
    pub fn new(allowlist: Vec<String>, workdir: PathBuf) -> Self {
        Self { allowlist, workdir }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidatedCommand {
    pub program: Program,
    pub argv: Vec<String>,
    pub raw_line: String,
}

const METACHARS: [char; 6] = [';', '|', '&', '`', '<', '>'];

/// Rejects rather than sanitizes: a metacharacter anywhere in the argv is
/// a rejection, never a silent strip. Paths must stay inside the work
/// directory.
pub fn validate(cmd: &ExtractedCommand, policy: &ExecPolicy) -> Result<ValidatedCommand, RejectionReason> {
    if cmd.argv.is_empty() || cmd.argv[0].is_empty() {
        return Err(RejectionReason::EmptyArgv);
    }
    let name = cmd.argv[0].as_str();
    if !policy.allowlist.iter().any(|p| p == name) {
        return Err(RejectionReason::ProgramNotAllowed);
    }
    let program = Program::from_name(name).ok_or(RejectionReason::ProgramNotAllowed)?;
    for token in &cmd.argv {
        if token.contains(METACHARS) || token.contains("$(") {
            return Err(RejectionReason::ShellMetacharacter);
        }
    }
    for token in &cmd.argv[1..] {
        if escapes_workdir(token) {
            return Err(RejectionReason::PathEscape);
        }
    }
    Ok(ValidatedCommand {
        program,
        argv: cmd.argv.clone(),
        raw_line: cmd.raw_line.clone(),
    })
}

/// Lexical confinement: absolute paths and any `..` traversal that climbs
/// above the work directory are escapes.
fn escapes_workdir(token: &str) -> bool {
    if token.starts_with('/') {
        return true;
    }
    if !token.contains('/') && token != ".." {
        return false;
    }
    let mut depth: i64 = 0;
    for comp in token.split('/') {
        match comp {
            "" | "." => {}
            ".." => {
                depth -= 1;
                if depth < 0 {
                    return true;
                }
            }
            _ => depth += 1,
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::executor::extract_commands;

    fn policy() -> ExecPolicy {
        ExecPolicy::new(
            ["ffmpeg", "ffprobe", "ffplay", "vvencapp", "vvencFFapp"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            PathBuf::from("/tmp/work"),
        )
    }

    fn extract_one(answer: &str) -> ExtractedCommand {
        let (mut cmds, _) = extract_commands(answer, &policy().allowlist);
        assert_eq!(cmds.len(), 1, "expected one command in {answer:?}");
        cmds.remove(0)
    }

    #[test]
    fn path_escape_rejected() {
        let cmd = extract_one("ffmpeg -i ../../etc/passwd out.mp4");
        assert_eq!(validate(&cmd, &policy()), Err(RejectionReason::PathEscape));
    }

    #[test]
    fn absolute_path_rejected() {
        let cmd = extract_one("ffmpeg -i /etc/passwd out.mp4");
        assert_eq!(validate(&cmd, &policy()), Err(RejectionReason::PathEscape));
    }

    #[test]
    fn chained_shell_command_rejected() {
        let cmd = extract_one("ffmpeg -i a.mp4 out.mp4 && rm -rf /");
        assert_eq!(
            validate(&cmd, &policy()),
            Err(RejectionReason::ShellMetacharacter)
        );
    }

    #[test]
    fn command_substitution_rejected() {
        let cmd = extract_one(r#"ffmpeg -i "$(touch pwned)" out.mp4"#);
        assert_eq!(
            validate(&cmd, &policy()),
            Err(RejectionReason::ShellMetacharacter)
        );
    }

    #[test]
    fn unknown_binary_rejected() {
        let (cmds, _) = extract_commands("```\ncurl -O http-stuff\n```", &policy().allowlist);
        assert_eq!(cmds.len(), 1);
        assert_eq!(
            validate(&cmds[0], &policy()),
            Err(RejectionReason::ProgramNotAllowed)
        );
    }

    #[test]
    fn logo_overlay_command_accepted() {
        let cmd = extract_one(
            r#"ffmpeg -i input.mp4 -i logo.png -filter_complex "overlay=W-w-10:H-h-10" output.mp4"#,
        );
        let v = validate(&cmd, &policy()).unwrap();
        assert_eq!(v.program, Program::Ffmpeg);
        assert_eq!(v.argv[6], "overlay=W-w-10:H-h-10");
    }

    #[test]
    fn filter_arithmetic_slashes_are_not_escapes() {
        let cmd = extract_one(
            r#"ffmpeg -i input.mp4 -vf "scale=1280:720,pad=1920:1080:(ow-iw)/2:(oh-ih)/2" output.mp4"#,
        );
        assert!(validate(&cmd, &policy()).is_ok());
    }

    #[test]
    fn subdirectory_paths_are_confined() {
        let cmd = extract_one("ffmpeg -i inputs/a.mp4 outputs/b.mp4");
        assert!(validate(&cmd, &policy()).is_ok());
        let cmd = extract_one("ffmpeg -i inputs/../../a.mp4 out.mp4");
        assert_eq!(validate(&cmd, &policy()), Err(RejectionReason::PathEscape));
    }
}
