//! Terminal front end: three panes (imagery, responses, input line) on an
//! interactive terminal, and a plain line-mode REPL with the same behaviour
//! for pipes and scripts.

use std::io::{self, BufRead, Write};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Arc};
use std::thread;
use std::time::Duration;

use crossterm::event::{self, Event, KeyCode, KeyEventKind, KeyModifiers};
use crossterm::style::Print;
use crossterm::terminal::{self, ClearType};
use crossterm::{cursor, execute, queue};

use crate::agent::{AgentResponse, AgentSession};
use crate::imagery::{MentalImage, CHAR_COLS, CHAR_ROWS};

pub const IMAGERY_ROWS: usize = CHAR_ROWS;

const SHADES: [char; 5] = [' ', '░', '▒', '▓', '█'];

/// Text for the imagery pane: the character grid of a char-mode image, or
/// a block-shaded preview (10 x 80) of any other image.
pub fn render_imagery_pane(img: &MentalImage) -> Vec<String> {
    if img.rows() == CHAR_ROWS && img.cols() == CHAR_COLS {
        return img.char_grid();
    }
    let (rows, cols) = (CHAR_ROWS, CHAR_COLS);
    (0..rows)
        .map(|r| {
            let (r0, r1) = (r * img.rows() / rows, ((r + 1) * img.rows() / rows).max(r * img.rows() / rows + 1));
            (0..cols)
                .map(|c| {
                    let (c0, c1) = (c * img.cols() / cols, ((c + 1) * img.cols() / cols).max(c * img.cols() / cols + 1));
                    let mut sum = 0.0;
                    for y in r0..r1.min(img.rows()) {
                        for x in c0..c1.min(img.cols()) {
                            sum += img.get(y, x);
                        }
                    }
                    let mean = sum / ((r1 - r0) * (c1 - c0)) as f64;
                    let level = (mean.clamp(0.0, 1.0) * (SHADES.len() - 1) as f64).round() as usize;
                    SHADES[level]
                })
                .collect()
        })
        .collect()
}

/// One line of the response pane.
pub fn response_line(session: &AgentSession, response: &AgentResponse) -> String {
    format!("{}> {}", session.prompt(), response.text())
}

/// What the line-mode loop reacts to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Input {
    Line(String),
    Eof,
    /// A termination signal was delivered.
    Terminate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Quit,
    EndOfInput,
    Signal,
}

/// Line-mode REPL over an input stream. Every response is printed as
/// `<prompt>> <text>`; on `___quit`, end of input or a termination signal
/// the soul is saved before returning.
pub fn line_mode<W: Write>(
    session: &mut AgentSession,
    inputs: impl IntoIterator<Item = Input>,
    out: &mut W,
    show_prompt: bool,
) -> io::Result<Exit> {
    if show_prompt {
        write!(out, "{}", session.caregiver_prompt())?;
        out.flush()?;
    }
    for input in inputs {
        match input {
            Input::Line(line) => {
                let response = session.handle_line(&line);
                if response != AgentResponse::Empty {
                    writeln!(out, "{}", response_line(session, &response))?;
                }
                if let AgentResponse::Quit(_) = response {
                    return Ok(Exit::Quit);
                }
            }
            Input::Eof => {
                save_or_warn(session, out)?;
                return Ok(Exit::EndOfInput);
            }
            Input::Terminate => {
                save_or_warn(session, out)?;
                return Ok(Exit::Signal);
            }
        }
        if show_prompt {
            write!(out, "{}", session.caregiver_prompt())?;
            out.flush()?;
        }
    }
    save_or_warn(session, out)?;
    Ok(Exit::EndOfInput)
}

fn save_or_warn<W: Write>(session: &mut AgentSession, out: &mut W) -> io::Result<()> {
    match session.save() {
        Ok(path) => log::info!("soul saved to {}", path.display()),
        Err(e) => writeln!(out, "error: {e}")?,
    }
    Ok(())
}

/// Merges stdin lines with the termination flag into one ordered stream of
/// [`Input`]s; the flag is polled while waiting for a line.
pub fn stdin_inputs(terminate: Arc<AtomicBool>) -> impl Iterator<Item = Input> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        let stdin = io::stdin();
        for line in stdin.lock().lines() {
            match line {
                Ok(l) => {
                    if tx.send(Input::Line(l)).is_err() {
                        return;
                    }
                }
                Err(_) => break,
            }
        }
        let _ = tx.send(Input::Eof);
    });
    let mut done = false;
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        loop {
            if terminate.load(Ordering::SeqCst) {
                done = true;
                return Some(Input::Terminate);
            }
            match rx.recv_timeout(Duration::from_millis(100)) {
                Ok(input) => {
                    done = input == Input::Eof;
                    return Some(input);
                }
                Err(mpsc::RecvTimeoutError::Timeout) => continue,
                Err(mpsc::RecvTimeoutError::Disconnected) => {
                    done = true;
                    return Some(Input::Eof);
                }
            }
        }
    })
}

/// Screen state of the three-pane interface.
#[derive(Debug, Default)]
pub struct Screen {
    pub imagery: Vec<String>,
    pub responses: Vec<String>,
    pub input: String,
    pub status: String,
}

impl Screen {
    /// Lays the panes out for a `width` x `height` terminal: imagery on top,
    /// the response scrollback in the middle, the input line at the bottom.
    pub fn layout(&self, width: usize, height: usize, input_prompt: &str) -> Vec<String> {
        let fit = |s: &str| s.chars().take(width).collect::<String>();
        let rule = |title: &str| fit(&format!("── {title} {}", "─".repeat(width)));
        let mut lines = Vec::with_capacity(height);
        lines.push(rule("imagery"));
        for i in 0..IMAGERY_ROWS {
            lines.push(fit(self.imagery.get(i).map_or("", String::as_str)));
        }
        lines.push(rule(&self.status));
        // header rule, imagery, middle rule, bottom rule, input
        let middle = height.saturating_sub(IMAGERY_ROWS + 4);
        let skip = self.responses.len().saturating_sub(middle);
        let shown: Vec<&String> = self.responses[skip..].iter().collect();
        for i in 0..middle {
            lines.push(shown.get(i).map_or_else(String::new, |s| fit(s)));
        }
        lines.push(rule("input"));
        lines.push(fit(&format!("{input_prompt}{}", self.input)));
        lines.truncate(height);
        lines
    }
}

fn draw(out: &mut impl Write, screen: &Screen, prompt: &str, previous: &mut Vec<String>) -> io::Result<()> {
    let (w, h) = terminal::size()?;
    let lines = screen.layout(w as usize, h as usize, prompt);
    for (i, line) in lines.iter().enumerate() {
        if previous.get(i) != Some(line) {
            queue!(
                out,
                cursor::MoveTo(0, i as u16),
                terminal::Clear(ClearType::CurrentLine),
                Print(line)
            )?;
        }
    }
    let input_row = lines.len().saturating_sub(1) as u16;
    let col = (prompt.chars().count() + screen.input.chars().count()).min(w as usize - 1) as u16;
    queue!(out, cursor::MoveTo(col, input_row), cursor::Show)?;
    out.flush()?;
    *previous = lines;
    Ok(())
}

fn refresh(screen: &mut Screen, session: &AgentSession) {
    screen.imagery = render_imagery_pane(&session.statement_image());
    screen.status = session.prompt();
}

/// Runs the three-pane interface until `___quit`, Ctrl-C / Ctrl-D or a
/// termination signal; the soul is saved on the way out.
pub fn run_tui(session: &mut AgentSession, terminate: Arc<AtomicBool>) -> io::Result<Exit> {
    let mut out = io::stdout();
    terminal::enable_raw_mode()?;
    execute!(out, terminal::EnterAlternateScreen, terminal::Clear(ClearType::All))?;
    let result = tui_loop(session, &terminate, &mut out);
    let _ = execute!(out, terminal::LeaveAlternateScreen, cursor::Show);
    let _ = terminal::disable_raw_mode();
    result
}

fn tui_loop(session: &mut AgentSession, terminate: &Arc<AtomicBool>, out: &mut io::Stdout) -> io::Result<Exit> {
    let mut screen = Screen::default();
    let mut previous = Vec::new();
    refresh(&mut screen, session);

    // redraw the status rule while `___sleep` runs; stop on a signal
    let flag = Arc::clone(terminate);
    session.set_sleep_observer(Some(Box::new(move |p| {
        if p.step == p.steps || p.step % 50 == 0 {
            let mut out = io::stdout();
            let _ = queue!(
                out,
                cursor::MoveTo(0, (IMAGERY_ROWS + 1) as u16),
                terminal::Clear(ClearType::CurrentLine),
                Print(format!("── sleeping: pass {}/{}, step {}/{}", p.pass, p.passes, p.step, p.steps))
            );
            let _ = out.flush();
        }
        !flag.load(Ordering::SeqCst)
    })));

    let exit = loop {
        draw(out, &screen, &session.caregiver_prompt(), &mut previous)?;
        if terminate.load(Ordering::SeqCst) {
            break Exit::Signal;
        }
        if !event::poll(Duration::from_millis(100))? {
            continue;
        }
        match event::read()? {
            Event::Key(key) if key.kind != KeyEventKind::Release => {
                let ctrl = key.modifiers.contains(KeyModifiers::CONTROL);
                match key.code {
                    KeyCode::Char('c') | KeyCode::Char('d') if ctrl => break Exit::Signal,
                    KeyCode::Char(c) => screen.input.push(c),
                    KeyCode::Backspace => {
                        screen.input.pop();
                    }
                    KeyCode::Enter => {
                        let line = std::mem::take(&mut screen.input);
                        let response = session.handle_line(&line);
                        if response != AgentResponse::Empty {
                            screen.responses.push(response_line(session, &response));
                        }
                        refresh(&mut screen, session);
                        if let AgentResponse::Quit(_) = response {
                            break Exit::Quit;
                        }
                    }
                    _ => {}
                }
            }
            Event::Resize(..) => {
                previous.clear();
                execute!(out, terminal::Clear(ClearType::All))?;
            }
            _ => {}
        }
    };
    session.set_sleep_observer(None);
    if exit != Exit::Quit {
        if let Err(e) = session.save() {
            log::error!("saving soul: {e}");
        }
    }
    Ok(exit)
}
