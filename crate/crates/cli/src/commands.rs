use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::sync::Arc;

use evshell::engine::{CompiledKb, EngineError, ExitPolicy, Session};
use evshell::kb::{editor_session, parse_kb, serialize_kb, validate_kb, Diagnostic, KnowledgeBase};
use evshell::network::{compile_network, emit_graph, GraphFormat};
use evshell::report::report;
use evshell::script::{parse_script, run_script};

use crate::{Cli, Failure, Format};

pub fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::environment(format!("cannot read {}: {e}", path.display())))
}

pub fn load_kb(path: &Path) -> Result<KnowledgeBase, Failure> {
    let text = read(path)?;
    parse_kb(&text).map_err(|e| Failure::usage(format!("{}:{e}", path.display())))
}

fn print_diagnostics(diagnostics: &[Diagnostic]) {
    for d in diagnostics {
        eprintln!("{d}");
    }
}

/// Loads, validates and compiles a knowledge base with the exit policy the
/// command line asks for.
pub fn prepare(cli: &Cli, path: &Path) -> Result<(Arc<CompiledKb>, ExitPolicy), Failure> {
    let kb = load_kb(path)?;
    let policy = match cli.threshold {
        Some(t) => ExitPolicy::new(t),
        None => ExitPolicy::for_kb(&kb),
    }
    .map_err(|e| Failure::usage(e.to_string()))?;
    let compiled = CompiledKb::new(kb).map_err(|e| match e {
        EngineError::InvalidKb(diagnostics) => {
            print_diagnostics(&diagnostics);
            Failure::usage(format!("{} is not a valid knowledge base", path.display()))
        }
        other => Failure::usage(other.to_string()),
    })?;
    Ok((Arc::new(compiled), policy))
}

pub fn validate(cli: &Cli, path: &Path) -> Result<u8, Failure> {
    let kb = load_kb(path)?;
    let diagnostics = validate_kb(&kb);
    let errors = diagnostics.iter().filter(|d| d.is_error()).count();
    match cli.format.unwrap_or(Format::Text) {
        Format::Json => {
            println!(
                "{}",
                serde_json::to_string_pretty(&diagnostics).expect("diagnostics serialize")
            );
        }
        Format::Text => {
            for d in &diagnostics {
                println!("{d}");
            }
            println!(
                "{}: {errors} error(s), {} warning(s)",
                path.display(),
                diagnostics.len() - errors
            );
        }
        Format::Dot => return Err(Failure::usage("validate prints text or json")),
    }
    Ok(if errors > 0 { 1 } else { 0 })
}

pub fn compile(cli: &Cli, path: &Path, out_dir: &Path) -> Result<u8, Failure> {
    let (format, ext) = match cli.format.unwrap_or(Format::Dot) {
        Format::Dot => (GraphFormat::Dot, "dot"),
        Format::Json => (GraphFormat::Json, "json"),
        Format::Text => return Err(Failure::usage("compile writes dot or json")),
    };
    let kb = load_kb(path)?;
    let diagnostics = validate_kb(&kb);
    if diagnostics.iter().any(Diagnostic::is_error) {
        print_diagnostics(&diagnostics);
        return Err(Failure::usage(format!(
            "{} is not a valid knowledge base",
            path.display()
        )));
    }
    let mut graphs = Vec::new();
    for partition in &kb.partitions {
        let net = compile_network(&kb, partition).map_err(|e| Failure::usage(e.to_string()))?;
        graphs.push((partition, emit_graph(&net, format)));
    }
    fs::create_dir_all(out_dir)
        .map_err(|e| Failure::environment(format!("cannot create {}: {e}", out_dir.display())))?;
    for (partition, graph) in graphs {
        let file = out_dir.join(format!("{partition}.{ext}"));
        fs::write(&file, graph).map_err(|e| Failure::environment(format!("cannot write {}: {e}", file.display())))?;
        println!("{}", file.display());
    }
    Ok(0)
}

pub fn print_report(cli: &Cli, session: &Session) -> Result<(), Failure> {
    let r = report(session);
    match cli.format.unwrap_or(Format::Text) {
        Format::Text => print!("{}", r.to_text()),
        Format::Json => print!("{}", r.to_json()),
        Format::Dot => return Err(Failure::usage("reports are text or json")),
    }
    io::stdout().flush().ok();
    Ok(())
}

pub fn batch(cli: &Cli, path: &Path, script_path: &Path) -> Result<u8, Failure> {
    if cli.format == Some(Format::Dot) {
        return Err(Failure::usage("reports are text or json"));
    }
    let (compiled, policy) = prepare(cli, path)?;
    let text = read(script_path)?;
    let script = parse_script(&text).map_err(|e| Failure::usage(format!("{}:{e}", script_path.display())))?;
    let mut session = Session::start(compiled, policy, &[]).map_err(|e| Failure::usage(e.to_string()))?;
    run_script(&mut session, &script).map_err(|e| Failure::usage(format!("{}:{e}", script_path.display())))?;
    print_report(cli, &session)?;
    Ok(0)
}

pub fn edit(path: &Path) -> Result<u8, Failure> {
    let kb = load_kb(path)?;
    let stdin = io::stdin();
    let mut input = stdin.lock();
    let mut out = io::stdout();
    let next = editor_session(&mut input, &mut out, &kb).map_err(|e| Failure::usage(e.to_string()))?;
    let added = next.rules.last().map(|r| r.id.clone()).unwrap_or_default();
    fs::write(path, serialize_kb(&next))
        .map_err(|e| Failure::environment(format!("cannot write {}: {e}", path.display())))?;
    println!("added {added} to {}", path.display());
    Ok(0)
}
