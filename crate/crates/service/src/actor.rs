//! One thread per session owns the engine session and serves its mailbox in
//! arrival order.

use caio_core::engine::{EngineError, Event, Input, Session, StateView};
use tokio::sync::{broadcast, mpsc, oneshot};

/// Events after `since`, and a receiver for everything emitted later.
pub type Subscription = (Vec<Event>, broadcast::Receiver<Event>);

pub enum Command {
    Input(Input, oneshot::Sender<Result<Vec<Event>, EngineError>>),
    State(oneshot::Sender<StateView>),
    Log { since: u64, reply: oneshot::Sender<Vec<Event>> },
    Subscribe { since: u64, reply: oneshot::Sender<Subscription> },
    Close(oneshot::Sender<()>),
}

#[derive(Clone)]
pub struct Mailbox {
    tx: mpsc::Sender<Command>,
}

#[derive(Debug, thiserror::Error)]
#[error("session is gone")]
pub struct Gone;

impl Mailbox {
    async fn ask<T>(&self, make: impl FnOnce(oneshot::Sender<T>) -> Command) -> Result<T, Gone> {
        let (tx, rx) = oneshot::channel();
        self.tx.send(make(tx)).await.map_err(|_| Gone)?;
        rx.await.map_err(|_| Gone)
    }

    pub async fn input(&self, input: Input) -> Result<Result<Vec<Event>, EngineError>, Gone> {
        self.ask(|tx| Command::Input(input, tx)).await
    }

    pub async fn state(&self) -> Result<StateView, Gone> {
        self.ask(Command::State).await
    }

    pub async fn log(&self, since: u64) -> Result<Vec<Event>, Gone> {
        self.ask(|reply| Command::Log { since, reply }).await
    }

    pub async fn subscribe(&self, since: u64) -> Result<Subscription, Gone> {
        self.ask(|reply| Command::Subscribe { since, reply }).await
    }

    pub async fn close(&self) -> Result<(), Gone> {
        self.ask(Command::Close).await
    }
}

const MAILBOX: usize = 64;
const STREAM: usize = 1024;

/// Start the session's thread. Events already in the log (initial facts)
/// are available to subscribers through `since`.
pub fn spawn(mut session: Session) -> Mailbox {
    let (tx, mut rx) = mpsc::channel::<Command>(MAILBOX);
    let (events, _) = broadcast::channel::<Event>(STREAM);
    let name = format!("session-{}", &session.id()[..8.min(session.id().len())]);
    std::thread::Builder::new()
        .name(name)
        .spawn(move || {
            while let Some(cmd) = rx.blocking_recv() {
                match cmd {
                    Command::Input(input, reply) => {
                        let result = session.handle(&input);
                        if let Ok(new) = &result {
                            for e in new {
                                // no subscriber is not an error
                                let _ = events.send(e.clone());
                            }
                        }
                        let _ = reply.send(result);
                    }
                    Command::State(reply) => {
                        let _ = reply.send(StateView::of(&session));
                    }
                    Command::Log { since, reply } => {
                        let _ = reply.send(after(&session, since));
                    }
                    Command::Subscribe { since, reply } => {
                        let _ = reply.send((after(&session, since), events.subscribe()));
                    }
                    Command::Close(reply) => {
                        session.close();
                        let _ = reply.send(());
                        break;
                    }
                }
            }
            tracing::debug!(session = session.id(), "session thread stopped");
        })
        .expect("spawn session thread");
    Mailbox { tx }
}

fn after(session: &Session, since: u64) -> Vec<Event> {
    session.events().iter().filter(|e| e.tick > since).cloned().collect()
}
