import { ArenaClient } from "./api.js";
import { ArenaApp } from "./app.js";

const root = document.getElementById("app");
if (root) {
  const app = new ArenaApp(root, new ArenaClient(""));
  void app.start();
}
