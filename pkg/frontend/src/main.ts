import { App } from "./app.js";

window.addEventListener("load", () => {
  new App().start();
});
