use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{AnnotationBody, Notification, NotifyReason, Timestamp};
use crate::store::Store;
use crate::text::{token_set_of, tokens};

impl Store {
    /// Contacts of `sender` sharing at least one folded token between their
    /// interests and the item's title or subjects.
    pub fn interested_contacts(&self, sender: &str, item: &str) -> Result<Vec<String>> {
        let contacts = &self.user(sender)?.contacts;
        let record = &self.item(item)?.record;
        let item_tokens = token_set_of(
            core::iter::once(record.title.as_str()).chain(record.subjects.iter().map(String::as_str)),
        );
        Ok(contacts
            .iter()
            .filter(|c| {
                self.user(c).is_ok_and(|u| {
                    u.interests.iter().flat_map(|i| tokens(i)).any(|t| item_tokens.contains(&t))
                })
            })
            .cloned()
            .collect())
    }

    /// Post an item to the sender's network: either to explicit recipients
    /// (all of whom must be contacts) or to the contacts with matching
    /// interests. Each target gets a parentless forward and a notification.
    pub fn post_to_network(
        &mut self,
        sender: &str,
        item: &str,
        message: &str,
        recipients: Option<&[String]>,
        now: Timestamp,
    ) -> Result<Vec<Notification>> {
        self.user(sender)?;
        self.item(item)?;
        let targets = match recipients {
            Some(list) => {
                let mut targets: Vec<String> = Vec::new();
                for r in list {
                    self.user(r)?;
                    if !self.are_contacts(sender, r) {
                        return Err(Error::NotContacts { from: sender.into(), to: r.clone() });
                    }
                    if !targets.contains(r) {
                        targets.push(r.clone());
                    }
                }
                targets
            }
            None => self.interested_contacts(sender, item)?,
        };
        let message = message.trim();
        let mut out = Vec::with_capacity(targets.len());
        for to in targets {
            let forward = self.new_annotation(
                sender,
                item,
                now,
                AnnotationBody::Forward { recipient: to.clone(), parent: None },
            );
            self.add_annotation(forward)?;
            let n = Notification {
                recipient: to,
                item: item.to_string(),
                reason: NotifyReason::NetworkPost,
                message: (!message.is_empty()).then(|| message.to_string()),
                created_at: now,
            };
            self.issue(n.clone())?;
            out.push(n);
        }
        Ok(out)
    }
}
