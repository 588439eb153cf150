use serde::Serialize;

pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration.
    Usage(String),
    /// The run itself failed.
    Runtime(imreg_core::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self::Usage(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            Self::Runtime(_) => EXIT_RUNTIME,
        }
    }

    /// One-line JSON for stderr.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Body<'a> {
            kind: &'a str,
            exit_code: i32,
            message: String,
        }
        #[derive(Serialize)]
        struct Wrapper<'a> {
            error: Body<'a>,
        }
        let (kind, message) = match self {
            Self::Usage(m) => ("usage", m.clone()),
            Self::Runtime(e) => (e.kind(), e.to_string()),
        };
        serde_json::to_string(&Wrapper { error: Body { kind, exit_code: self.exit_code(), message } })
            .expect("error body serializes")
    }
}

impl From<imreg_core::Error> for CliError {
    fn from(e: imreg_core::Error) -> Self {
        Self::Runtime(e)
    }
}
